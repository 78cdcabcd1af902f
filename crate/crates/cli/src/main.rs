fn main() {
    std::process::exit(survival_cli::main_with_args(std::env::args_os()));
}
