fn main() {
    std::process::exit(kkit_cli::run_args(std::env::args_os()));
}
