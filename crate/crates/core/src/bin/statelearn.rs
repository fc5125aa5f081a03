fn main() {
    std::process::exit(statelearn::cli::run(std::env::args_os()));
}
