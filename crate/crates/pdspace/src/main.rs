fn main() {
    std::process::exit(pdspace::cli::run(std::env::args_os()));
}
