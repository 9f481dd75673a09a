use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    let env = editkit::cli::process_env();
    let code = editkit::cli::run(std::env::args_os(), &env, &mut io::stdout().lock(), &mut io::stderr().lock());
    ExitCode::from(code as u8)
}
