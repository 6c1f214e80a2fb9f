fn main() {
    std::process::exit(error_parity::cli::run(std::env::args_os()));
}
