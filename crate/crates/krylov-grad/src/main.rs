fn main() -> std::process::ExitCode {
    krylov_grad::cli::main_with_args(std::env::args_os())
}
