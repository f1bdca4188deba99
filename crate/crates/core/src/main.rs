use std::process::ExitCode;

fn main() -> ExitCode {
    wlasso::cli::main()
}
