fn main() {
    std::process::exit(samkit::cli::run(std::env::args_os()));
}
