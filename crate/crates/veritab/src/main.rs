use std::process::ExitCode;

fn main() -> ExitCode {
    veritab::cli::main_entry()
}
