//! Command-line driver and HTTP service for the MindMap engine.

pub mod generate;
pub mod images;
pub mod server;
pub mod store;

use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "mindmap", version, about = "Turn parsed text into multilevel MindMaps")]
#[command(after_help = "Image search over HTTP reads MINDMAP_IMAGE_ENDPOINT and MINDMAP_IMAGE_API_KEY.")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write SVG MindMaps for a document.
    Generate(generate::GenerateArgs),
    /// Run the HTTP service for interactive browsing.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    /// Concept ontology JSON.
    #[arg(long, value_name = "FILE")]
    pub ontology: PathBuf,
    /// Default configuration for new sessions.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
    /// Directory for documents and sessions.
    #[arg(long, value_name = "DIR", default_value = "mindmap-store")]
    pub store: PathBuf,
    #[command(flatten)]
    pub images: images::ImageArgs,
}
