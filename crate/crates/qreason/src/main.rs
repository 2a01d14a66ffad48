fn main() {
    std::process::exit(qreason::cli::run(std::env::args_os()));
}
