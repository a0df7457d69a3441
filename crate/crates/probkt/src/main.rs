fn main() -> std::process::ExitCode {
    probkt::cli::main()
}
