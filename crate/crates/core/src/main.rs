fn main() {
    std::process::exit(ddestab::cli::run(std::env::args_os()));
}
