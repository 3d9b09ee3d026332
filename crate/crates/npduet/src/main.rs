fn main() {
    std::process::exit(npduet::cli::run(std::env::args_os()));
}
