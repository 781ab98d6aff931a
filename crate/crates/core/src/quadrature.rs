//! Composite Simpson quadrature.

/// Composite Simpson rule on `[a, b]` with `nodes` equally spaced nodes.
///
/// An even node count is bumped to the next odd one. `nodes < 3` or an empty
/// interval yields 0.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, nodes: usize) -> f64 {
    if nodes < 3 || !(b > a) {
        return 0.0;
    }
    let intervals = if nodes % 2 == 1 { nodes - 1 } else { nodes };
    let step = (b - a) / intervals as f64;
    let mut odd = 0.0;
    let mut even = 0.0;
    for i in 1..intervals {
        let x = a + i as f64 * step;
        if i % 2 == 1 {
            odd += f(x);
        } else {
            even += f(x);
        }
    }
    (f(a) + f(b) + 4.0 * odd + 2.0 * even) * step / 3.0
}

/// Simpson rule applied separately on each piece `[p_k, p_{k+1}]` of a sorted
/// partition, with roughly `nodes` nodes spread in proportion to piece length.
///
/// Splitting at discontinuities of `f` keeps the rule's accuracy. Piece
/// endpoints are moved one ulp inward so that `f` is sampled on the correct
/// side of a jump.
pub fn simpson_piecewise<F: Fn(f64) -> f64>(f: F, breaks: &[f64], nodes: usize) -> f64 {
    if breaks.len() < 2 {
        return 0.0;
    }
    let total = breaks[breaks.len() - 1] - breaks[0];
    if !(total > 0.0) {
        return 0.0;
    }
    breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let share = ((w[1] - w[0]) / total * nodes as f64).ceil() as usize;
            simpson(&f, w[0].next_up(), w[1].next_down(), share.max(3) | 1)
        })
        .sum()
}
