fn main() {
    std::process::exit(cvxlab::cli::run(std::env::args_os()));
}
