fn main() {
    std::process::exit(spinhop::cli::run_cli(std::env::args_os()));
}
