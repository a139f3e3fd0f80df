fn main() {
    std::process::exit(kwflow::cli::run(std::env::args_os()));
}
