fn main() {
    std::process::exit(vstate::cli::run(std::env::args_os()));
}
