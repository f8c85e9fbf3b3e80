fn main() {
    std::process::exit(tmlp_cli::run(std::env::args_os()));
}
