fn main() {
    std::process::exit(quasibath::cli::run(std::env::args_os()));
}
