fn main() -> std::process::ExitCode {
    tumorsim::cli::main_with_args(std::env::args_os())
}
