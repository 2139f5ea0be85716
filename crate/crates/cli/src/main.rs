fn main() {
    std::process::exit(lads_cli::run(std::env::args_os()));
}
