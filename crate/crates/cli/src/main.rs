use std::process::ExitCode;

fn main() -> ExitCode {
    let code = exsim_cli::app::main_with_args(
        std::env::args_os(),
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    );
    ExitCode::from(code)
}
