use std::process::ExitCode;

fn main() -> ExitCode {
    match optomech::cli::main_with(std::env::args_os()) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
