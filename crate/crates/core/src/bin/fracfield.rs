fn main() {
    std::process::exit(fracfield::cli::run(std::env::args_os()));
}
