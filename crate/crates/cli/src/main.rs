fn main() {
    std::process::exit(survnet_cli::run(std::env::args_os()));
}
