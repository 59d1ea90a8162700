fn main() {
    std::process::exit(dcrbm::cli::run(std::env::args_os()));
}
