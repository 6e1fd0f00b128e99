fn main() {
    std::process::exit(qdiffract::cli::run(std::env::args_os()));
}
