fn main() {
    std::process::exit(hma::cli::main_with_args(std::env::args().collect()));
}
