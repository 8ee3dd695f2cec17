use std::process::ExitCode;

fn main() -> ExitCode {
    match etea_cli::run(std::env::args_os()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("etea: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
