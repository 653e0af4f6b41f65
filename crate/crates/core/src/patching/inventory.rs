use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::entropy::EntropyStats;
use super::tensorize::ValueRange;
use crate::error::{Error, Result};

/// One row of the patch inventory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchRecord {
    pub artwork_id: String,
    pub row: u32,
    pub col: u32,
    pub entropy_r: f64,
    pub entropy_g: f64,
    pub entropy_b: f64,
    pub mean_entropy: f64,
}

impl EntropyStats for PatchRecord {
    fn mean_entropy(&self) -> f64 {
        self.mean_entropy
    }
}

pub fn write_inventory(records: &[PatchRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::malformed(path, e))?;
    for r in records {
        w.serialize(r).map_err(|e| Error::malformed(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_inventory(path: &Path) -> Result<Vec<PatchRecord>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::malformed(path, e))?;
    rdr.deserialize()
        .map(|r| r.map_err(|e| Error::malformed(path, e)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorCacheHeader {
    pub side: usize,
    pub range: ValueRange,
    pub order: String,
    pub count: usize,
}

/// Flat little-endian `f32` file of per-patch HWC tensors plus a JSON sidecar.
/// Entry `i` belongs to inventory row `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorCache {
    pub header: TensorCacheHeader,
    pub data: Vec<f32>,
}

impl TensorCache {
    pub fn new(side: usize, range: ValueRange) -> Self {
        Self {
            header: TensorCacheHeader {
                side,
                range,
                order: "row,col,channel".into(),
                count: 0,
            },
            data: Vec::new(),
        }
    }

    pub fn entry_len(&self) -> usize {
        self.header.side * self.header.side * 3
    }

    pub fn push(&mut self, hwc: &[f32]) {
        assert_eq!(hwc.len(), self.entry_len());
        self.data.extend_from_slice(hwc);
        self.header.count += 1;
    }

    pub fn entry(&self, i: usize) -> &[f32] {
        let n = self.entry_len();
        &self.data[i * n..(i + 1) * n]
    }

    pub fn sidecar_path(path: &Path) -> PathBuf {
        path.with_extension("json")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for v in &self.data {
            w.write_all(&v.to_le_bytes()).map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        let side = Self::sidecar_path(path);
        let text = serde_json::to_string_pretty(&self.header).expect("header serializes");
        fs::write(&side, text + "\n").map_err(|e| Error::io(&side, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let side = Self::sidecar_path(path);
        let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
        let header: TensorCacheHeader =
            serde_json::from_str(&text).map_err(|e| Error::malformed(&side, e))?;
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let expected = header.count * header.side * header.side * 3 * 4;
        if bytes.len() != expected {
            return Err(Error::malformed(
                path,
                format!("expected {expected} bytes, found {}", bytes.len()),
            ));
        }
        let data = bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        Ok(Self { header, data })
    }
}
