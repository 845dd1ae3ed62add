fn main() {
    std::process::exit(kcsp::cli::run(std::env::args_os()));
}
