fn main() {
    std::process::exit(polyloc::cli::run(std::env::args_os()));
}
