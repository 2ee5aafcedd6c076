fn main() -> std::process::ExitCode {
    squeezeclock::cli::run()
}
