fn main() -> std::process::ExitCode {
    lecturelens_server::cli::main()
}
