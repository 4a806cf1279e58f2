//! Versioned JSON documents for fitted models and checkpoints.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub trait Versioned: Serialize + DeserializeOwned {
    const FORMAT: &'static str;
    const VERSION: u32;
}

#[derive(Debug, Serialize, Deserialize)]
struct Envelope<T> {
    format: String,
    version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    model: T,
}

pub fn to_json<T: Versioned>(model: &T, seed: Option<u64>) -> Result<String> {
    let env = Envelope {
        format: T::FORMAT.to_string(),
        version: T::VERSION,
        seed,
        model,
    };
    Ok(serde_json::to_string_pretty(&env)?)
}

/// Parses a document, returning the model and the seed it was recorded with.
pub fn from_json<T: Versioned>(text: &str) -> Result<(T, Option<u64>)> {
    let env: Envelope<serde_json::Value> = serde_json::from_str(text)?;
    if env.format != T::FORMAT {
        return Err(Error::Document(format!(
            "expected format `{}`, found `{}`",
            T::FORMAT,
            env.format
        )));
    }
    if env.version > T::VERSION {
        return Err(Error::Document(format!(
            "`{}` version {} is newer than supported version {}",
            env.format,
            env.version,
            T::VERSION
        )));
    }
    Ok((serde_json::from_value(env.model)?, env.seed))
}

pub fn save<T: Versioned>(path: impl AsRef<Path>, model: &T, seed: Option<u64>) -> Result<()> {
    std::fs::write(path, to_json(model, seed)?)?;
    Ok(())
}

pub fn load<T: Versioned>(path: impl AsRef<Path>) -> Result<(T, Option<u64>)> {
    from_json(&std::fs::read_to_string(path)?)
}
