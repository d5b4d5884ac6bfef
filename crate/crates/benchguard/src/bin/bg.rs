fn main() {
    std::process::exit(benchguard::cli::run(std::env::args()));
}
