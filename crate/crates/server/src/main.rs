use std::process::ExitCode;

use commdyn_server::{init_tracing, serve, ServerConfig};

#[tokio::main]
async fn main() -> ExitCode {
    init_tracing();
    let config = match ServerConfig::from_env() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match serve(config).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
