//! Reading asset, session, metadata and event files from disk.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use peakcut_core::events::EventPartition;
use peakcut_core::metadata::Metadata;
use peakcut_core::session::{parse_sessions_with, ParseOptions, ParsedSessions, SessionFormat};
use peakcut_core::{AssetInfo, AssetInputs};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InputError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
}

impl InputError {
    fn invalid(path: &Path, message: impl ToString) -> Self {
        Self::Invalid {
            path: path.to_path_buf(),
            message: message.to_string(),
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>, InputError> {
    File::open(path).map(BufReader::new).map_err(|source| InputError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, InputError> {
    serde_json::from_reader(open(path)?).map_err(|e| InputError::invalid(path, e))
}

pub fn load_asset(path: &Path) -> Result<AssetInfo, InputError> {
    let asset: AssetInfo = read_json(path)?;
    asset.validate().map_err(|e| InputError::invalid(path, e))?;
    Ok(asset)
}

/// `csv` files are read as CSV, everything else as JSONL, unless `format` is given.
pub fn load_sessions(path: &Path, format: Option<SessionFormat>, opts: &ParseOptions) -> Result<ParsedSessions, InputError> {
    let format = format.unwrap_or(match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => SessionFormat::Csv,
        _ => SessionFormat::Jsonl,
    });
    parse_sessions_with(open(path)?, format, *opts).map_err(|e| InputError::invalid(path, e))
}

pub fn load_metadata(path: &Path) -> Result<Metadata, InputError> {
    let meta: Metadata = read_json(path)?;
    meta.validate().map_err(|e| InputError::invalid(path, e))?;
    Ok(meta)
}

pub fn load_events(path: &Path) -> Result<EventPartition, InputError> {
    let events: EventPartition = read_json(path)?;
    events.validate().map_err(|e| InputError::invalid(path, e))?;
    Ok(events)
}

/// File locations for one asset, as registered with the service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputPaths {
    pub asset: PathBuf,
    pub sessions: PathBuf,
    #[serde(default)]
    pub metadata: Option<PathBuf>,
    #[serde(default)]
    pub events: Option<PathBuf>,
}

impl InputPaths {
    pub fn load(&self) -> Result<AssetInputs, InputError> {
        let asset = load_asset(&self.asset)?;
        let sessions = load_sessions(&self.sessions, None, &ParseOptions::default())?.sessions;
        let metadata = self.metadata.as_deref().map(load_metadata).transpose()?.unwrap_or_default();
        let events = self.events.as_deref().map(load_events).transpose()?;
        Ok(AssetInputs {
            asset,
            sessions,
            metadata,
            events,
        })
    }
}
