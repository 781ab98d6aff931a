fn main() {
    std::process::exit(boundary_kde::cli::run_cli(std::env::args_os()));
}
