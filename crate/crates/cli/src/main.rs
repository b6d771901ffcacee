fn main() {
    std::process::exit(wente_cli::run(std::env::args_os()));
}
