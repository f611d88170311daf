fn main() {
    std::process::exit(mimo_secrecy::cli::run(std::env::args_os()));
}
