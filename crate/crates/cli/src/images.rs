use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use mindmap_core::{HttpProvider, ImageCache, ImageProvider, ManifestProvider};

#[derive(Debug, Clone, Default, Args)]
pub struct ImageArgs {
    /// Offline image manifest (query -> image entry). Without this or
    /// --http-images every visual frame is drawn as a labeled box.
    #[arg(long, value_name = "FILE", conflicts_with = "http_images")]
    pub manifest: Option<PathBuf>,
    /// Search images over HTTP at $MINDMAP_IMAGE_ENDPOINT, sending
    /// $MINDMAP_IMAGE_API_KEY when set.
    #[arg(long)]
    pub http_images: bool,
    /// Directory for cached image lookups.
    #[arg(long, value_name = "DIR")]
    pub image_cache: Option<PathBuf>,
}

pub struct Images {
    provider: Box<dyn ImageProvider>,
    cache: Option<ImageCache>,
}

impl Images {
    pub fn from_args(a: &ImageArgs) -> Result<Self> {
        let provider: Box<dyn ImageProvider> = if a.http_images {
            Box::new(HttpProvider::from_env()?)
        } else if let Some(m) = &a.manifest {
            Box::new(ManifestProvider::load(m).with_context(|| format!("loading {}", m.display()))?)
        } else {
            Box::new(ManifestProvider::default())
        };
        let cache = a.image_cache.as_ref().map(ImageCache::open).transpose()?;
        Ok(Self { provider, cache })
    }

    pub fn provider(&self) -> &dyn ImageProvider {
        self.provider.as_ref()
    }

    pub fn cache(&self) -> Option<&ImageCache> {
        self.cache.as_ref()
    }
}
