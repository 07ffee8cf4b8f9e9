fn main() -> std::process::ExitCode {
    echo_cli::main_with_args(std::env::args_os())
}
