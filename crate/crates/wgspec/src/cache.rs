//! Content-addressed store for boundary spectral data.
//!
//! A cache file is a one-line JSON header `{"key", "sha256"}` followed by the payload.
//! The digest covers the payload bytes exactly, so any edit or truncation is detected.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use waveguide_spectral::forward::{BoundarySpectralData, TruncationSpec};
use waveguide_spectral::geometry::{CellGeometry, Potential, QuasiMomentum};

use crate::error::{Error, Result};
use crate::scenario::hex_sha256;

const FORMAT: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CacheStatus {
    Hit,
    Miss,
    /// The file existed but failed verification.
    Regenerated,
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: u32,
    key: String,
    sha256: String,
}

#[derive(Serialize)]
struct KeyMaterial<'a> {
    format: u32,
    geometry: &'a CellGeometry,
    theta: f64,
    truncation: &'a TruncationSpec,
    potential: &'a Potential,
}

pub fn bsd_key(geom: &CellGeometry, theta: QuasiMomentum, trunc: &TruncationSpec, v: &Potential) -> String {
    let m = KeyMaterial { format: FORMAT, geometry: geom, theta: theta.theta(), truncation: trunc, potential: v };
    hex_sha256(&serde_json::to_vec(&m).expect("key material serializes"))
}

pub struct BsdCache {
    dir: PathBuf,
}

impl BsdCache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(BsdCache { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("bsd-{key}.json"))
    }

    fn read(&self, key: &str) -> std::result::Result<Option<BoundarySpectralData>, String> {
        let path = self.path(key);
        let bytes = match std::fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.to_string()),
        };
        let nl = bytes.iter().position(|&b| b == b'\n').ok_or("missing header line")?;
        let header: Header = serde_json::from_slice(&bytes[..nl]).map_err(|e| format!("bad header: {e}"))?;
        let payload = &bytes[nl + 1..];
        if header.format != FORMAT || header.key != key {
            return Err("header does not match the requested key".into());
        }
        if hex_sha256(payload) != header.sha256 {
            return Err("payload hash mismatch".into());
        }
        let bsd: BoundarySpectralData = serde_json::from_slice(payload).map_err(|e| format!("bad payload: {e}"))?;
        bsd.validate().map_err(|e| e.to_string())?;
        Ok(Some(bsd))
    }

    /// Writes through a temporary file in the cache directory and renames it into place.
    pub fn write(&self, key: &str, bsd: &BoundarySpectralData) -> Result<()> {
        let payload = serde_json::to_vec(bsd)?;
        let header = Header { format: FORMAT, key: key.to_string(), sha256: hex_sha256(&payload) };
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let path = self.path(key);
        (|| -> std::io::Result<()> {
            serde_json::to_writer(&mut tmp, &header)?;
            tmp.write_all(b"\n")?;
            tmp.write_all(&payload)?;
            tmp.as_file().sync_all()
        })()
        .map_err(|e| Error::io(tmp.path(), e))?;
        tmp.persist(&path).map_err(|e| Error::io(&path, e.error))?;
        Ok(())
    }

    pub fn load_or_compute<F>(&self, key: &str, label: &str, compute: F) -> Result<(BoundarySpectralData, CacheStatus)>
    where
        F: FnOnce() -> Result<BoundarySpectralData>,
    {
        let status = match self.read(key) {
            Ok(Some(bsd)) => {
                log::info!("cache hit: {label} bsd-{}", &key[..16]);
                return Ok((bsd, CacheStatus::Hit));
            }
            Ok(None) => {
                log::info!("cache miss: {label} bsd-{}, computing", &key[..16]);
                CacheStatus::Miss
            }
            Err(why) => {
                log::warn!("cache file {} is corrupt ({why}); regenerating", self.path(key).display());
                CacheStatus::Regenerated
            }
        };
        let bsd = compute()?;
        self.write(key, &bsd)?;
        Ok((bsd, status))
    }
}
