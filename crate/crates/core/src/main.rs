fn main() {
    std::process::exit(normreg::cli::run(std::env::args_os()));
}
