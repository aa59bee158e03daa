fn main() {
    std::process::exit(ordrep::cli::run(std::env::args_os()));
}
