fn main() {
    std::process::exit(ipg_cli::main_with_args(std::env::args_os()));
}
