fn main() {
    std::process::exit(stoktok::cli::run_from(std::env::args_os()));
}
