fn main() {
    let code = qgt_cli::run_from_args(std::env::args_os());
    std::process::exit(code);
}
