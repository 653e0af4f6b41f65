use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::Tensor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub arch: String,
    pub shapes: Vec<Vec<usize>>,
    pub seed: u64,
    pub epoch: usize,
    /// Architecture details, hyperparameters and run configuration.
    #[serde(default)]
    pub meta: serde_json::Value,
}

/// Parameters serialized as one JSON header line followed by the raw
/// little-endian `f32` values of every tensor in order.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub params: Vec<Tensor<f32>>,
}

impl Checkpoint {
    pub fn new(arch: impl Into<String>, params: Vec<Tensor<f32>>, seed: u64, epoch: usize, meta: serde_json::Value) -> Self {
        let shapes = params.iter().map(|p| p.shape().to_vec()).collect();
        Self {
            header: CheckpointHeader {
                arch: arch.into(),
                shapes,
                seed,
                epoch,
                meta,
            },
            params,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec(&self.header).expect("header serializes");
        out.push(b'\n');
        for p in &self.params {
            for v in p.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], source: &Path) -> Result<Self> {
        let nl = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::malformed(source, "checkpoint header not terminated"))?;
        let header: CheckpointHeader =
            serde_json::from_slice(&bytes[..nl]).map_err(|e| Error::malformed(source, e))?;
        let body = &bytes[nl + 1..];
        let total: usize = header.shapes.iter().map(|s| s.iter().product::<usize>()).sum();
        if body.len() != total * 4 {
            return Err(Error::malformed(
                source,
                format!("expected {} parameter bytes, found {}", total * 4, body.len()),
            ));
        }
        let mut values = body
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]));
        let params = header
            .shapes
            .iter()
            .map(|s| {
                let n = s.iter().product();
                Tensor::from_vec(s.clone(), values.by_ref().take(n).collect())
            })
            .collect();
        Ok(Self { header, params })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn bytes_round_trip(vals in proptest::collection::vec(-1e6f32..1e6, 1..64), split in 0usize..64, epoch in 0usize..100) {
            let split = split.min(vals.len());
            let a = Tensor::from_vec(vec![split], vals[..split].to_vec());
            let b = Tensor::from_vec(vec![vals.len() - split, 1], vals[split..].to_vec());
            let ck = Checkpoint::new("kan", vec![a, b], 7, epoch, serde_json::json!({"grid": 5}));
            let back = Checkpoint::from_bytes(&ck.to_bytes(), Path::new("mem")).unwrap();
            prop_assert_eq!(back, ck);
        }
    }

    #[test]
    fn truncated_body_rejected() {
        let ck = Checkpoint::new("x", vec![Tensor::from_vec(vec![2], vec![1.0, 2.0])], 0, 0, serde_json::Value::Null);
        let mut bytes = ck.to_bytes();
        bytes.pop();
        assert!(Checkpoint::from_bytes(&bytes, Path::new("m")).is_err());
    }
}
