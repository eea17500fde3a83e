//! Cache path layout and atomic image persistence.
//!
//! Layout: `<cache_root>/<prefix-hash-hex>/<index>.png`, where the prefix
//! hash covers every key field except the index. A batch therefore occupies
//! one directory, and a crash mid-write can never leave a decodable but wrong
//! entry: bytes land in a temporary file that is renamed into place.

use std::io::Cursor;
use std::path::{Path, PathBuf};

use image::RgbImage;

use super::{CacheKey, ImageGenError};

pub(super) fn entry_path(cache_root: &Path, key: &CacheKey) -> PathBuf {
    cache_root.join(format!("{:016x}", key.prefix_hash())).join(format!("{}.png", key.index))
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> ImageGenError {
    ImageGenError::Io { path: path.to_path_buf(), detail: e.to_string() }
}

pub(super) fn write_png_atomic(path: &Path, image: &RgbImage) -> Result<(), ImageGenError> {
    let dir = path.parent().expect("cache entry path always has a parent");
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut bytes = Vec::new();
    image
        .write_to(&mut Cursor::new(&mut bytes), image::ImageFormat::Png)
        .map_err(|e| io_err(path, e))?;
    let file_name = path.file_name().expect("cache entry path always has a file name");
    let tmp = dir.join(format!(".{}.{}.tmp", file_name.to_string_lossy(), std::process::id()));
    std::fs::write(&tmp, &bytes).map_err(|e| io_err(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| io_err(path, e))?;
    Ok(())
}

pub(super) fn load_png(path: &Path) -> Result<RgbImage, ImageGenError> {
    let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
    decode_image(&bytes, path)
}

/// Decodes image bytes, reporting failures as cache corruption at `origin`.
pub(super) fn decode_image(bytes: &[u8], origin: &Path) -> Result<RgbImage, ImageGenError> {
    image::load_from_memory(bytes)
        .map(|img| img.to_rgb8())
        .map_err(|e| ImageGenError::CacheCorrupt {
            path: origin.to_path_buf(),
            detail: e.to_string(),
        })
}
