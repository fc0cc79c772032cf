use std::process::ExitCode;
use std::sync::Arc;

use clap::Parser;
use mindmap_cli::generate::{load_config, read_ontology, run_generate};
use mindmap_cli::images::Images;
use mindmap_cli::server::{serve, AppState};
use mindmap_cli::store::Store;
use mindmap_cli::{Cli, Command, ServeArgs};

fn run_serve(args: &ServeArgs) -> anyhow::Result<()> {
    let state = AppState::new(
        read_ontology(&args.ontology)?,
        load_config(args.config.as_deref())?,
        Store::open(&args.store)?,
        Images::from_args(&args.images)?,
    );
    tokio::runtime::Runtime::new()?.block_on(serve(args.addr, Arc::new(state)))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(a) => run_generate(a).map(|report| {
            for f in &report.files {
                println!("{}", f.display());
            }
        }),
        Command::Serve(a) => run_serve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
