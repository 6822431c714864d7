//! File formats.

mod binary;
mod image;

pub use binary::{
    load_shape_space, load_volume, read_shape_space, read_volume, save_shape_space, save_volume, write_shape_space,
    write_volume,
};
pub use image::{decode_pfm, decode_pgm, encode_pfm, encode_pgm, load_pfm, load_pgm, save_pfm, save_pgm};

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
