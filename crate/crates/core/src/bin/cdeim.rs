fn main() {
    std::process::exit(cdeim::cli::run_cli(std::env::args_os()));
}
