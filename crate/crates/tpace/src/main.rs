fn main() {
    std::process::exit(tpace::cli::run(std::env::args_os()));
}
