fn main() {
    std::process::exit(ermakat::cli::run(std::env::args()));
}
