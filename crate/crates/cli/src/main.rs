fn main() {
    std::process::exit(diagdesign_cli::main_with_args(std::env::args_os()));
}
