fn main() {
    std::process::exit(jade_cli::main_with_args(std::env::args_os()));
}
