//! Filesystem wrappers over the binary codecs: dataset caches (`.pgrd`) and
//! model checkpoints (`.pcnv`).

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use pconv_core::dataset::{decode_cache, encode_cache, CacheError, Dataset};
use pconv_core::net::checkpoint::{decode_model, encode_model, CheckpointError};
use pconv_core::net::ModelState;
use thiserror::Error;

use crate::io::atomic_write;

#[derive(Debug, Error)]
pub enum FileError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Cache {
        path: PathBuf,
        #[source]
        source: CacheError,
    },
    #[error("{path}: {source}")]
    Checkpoint {
        path: PathBuf,
        #[source]
        source: CheckpointError,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> FileError + '_ {
    move |source| FileError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn save_cache(dataset: &Dataset, path: &Path) -> Result<(), FileError> {
    atomic_write(path, &encode_cache(dataset)).map_err(io_err(path))
}

pub fn load_cache(path: &Path) -> Result<Dataset, FileError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    decode_cache(&bytes).map_err(|source| FileError::Cache {
        path: path.to_path_buf(),
        source,
    })
}

pub fn save_checkpoint(model: &ModelState, path: &Path) -> Result<(), FileError> {
    atomic_write(path, &encode_model(model)).map_err(io_err(path))
}

pub fn load_checkpoint(path: &Path) -> Result<ModelState, FileError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    decode_model(&bytes).map_err(|source| FileError::Checkpoint {
        path: path.to_path_buf(),
        source,
    })
}
