use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::NormStats;
use crate::error::{Error, Result};
use crate::model::{ModelConfig, ParamEntry, Parameters, LAYER_ORDER};
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 4] = b"EFCK";
pub const FORMAT_VERSION: u16 = 1;

/// Trained weights plus everything needed to rebuild inputs for them.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub params: Parameters,
    pub norm: NormStats,
    pub seed: u64,
    pub val_fraction: f64,
    /// Last completed epoch, counting from 1.
    pub epoch: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorInfo {
    pub name: String,
    pub shape: Vec<usize>,
    /// Offset into the payload, in f32 elements.
    pub offset: usize,
    pub trainable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub model: ModelConfig,
    pub layer_order: String,
    pub norm: NormStats,
    pub seed: u64,
    pub val_fraction: f64,
    pub epoch: usize,
    pub tensors: Vec<TensorInfo>,
}

impl Checkpoint {
    pub fn header(&self) -> CheckpointHeader {
        let mut offset = 0;
        let tensors = self
            .params
            .entries()
            .iter()
            .map(|e| {
                let info = TensorInfo {
                    name: e.name.clone(),
                    shape: e.value.shape().to_vec(),
                    offset,
                    trainable: e.trainable,
                };
                offset += e.value.numel();
                info
            })
            .collect();
        CheckpointHeader {
            model: self.params.config().clone(),
            layer_order: LAYER_ORDER.to_string(),
            norm: self.norm.clone(),
            seed: self.seed,
            val_fraction: self.val_fraction,
            epoch: self.epoch,
            tensors,
        }
    }

    /// Serialized bytes. Values are stored as f32.
    pub fn to_bytes(&self) -> Vec<u8> {
        let header = serde_json::to_vec(&self.header()).expect("header serializes");
        let payload_len: usize = self.params.entries().iter().map(|e| e.value.numel()).sum();
        let mut out = Vec::with_capacity(10 + header.len() + 4 * payload_len);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        for e in self.params.entries() {
            for &v in e.value.data() {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (header, payload) = split_header(bytes)?;
        let total: usize = header
            .tensors
            .iter()
            .map(|t| t.shape.iter().product::<usize>())
            .sum();
        if payload.len() != 4 * total {
            return Err(Error::Format(format!(
                "payload holds {} bytes, directory needs {}",
                payload.len(),
                4 * total
            )));
        }
        if header.layer_order != LAYER_ORDER {
            return Err(Error::Format(format!(
                "unsupported layer order {:?}",
                header.layer_order
            )));
        }
        let mut entries = Vec::with_capacity(header.tensors.len());
        let mut expected = 0;
        for t in &header.tensors {
            let n: usize = t.shape.iter().product();
            if t.offset != expected {
                return Err(Error::Format(format!(
                    "tensor {} at offset {}, expected {expected}",
                    t.name, t.offset
                )));
            }
            expected += n;
            let data = payload[4 * t.offset..4 * (t.offset + n)]
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
                .collect();
            let value = Tensor::new(t.shape.clone(), data)
                .map_err(|e| Error::Format(format!("tensor {}: {e}", t.name)))?;
            entries.push(ParamEntry {
                name: t.name.clone(),
                value,
                trainable: t.trainable,
            });
        }
        let params = Parameters::from_entries(header.model.clone(), entries)?;
        params.check_against_config()?;
        if params.config().d_in != header.norm.width() {
            return Err(Error::Format(format!(
                "model expects {} features, normalization keeps {}",
                params.config().d_in,
                header.norm.width()
            )));
        }
        Ok(Checkpoint {
            params,
            norm: header.norm,
            seed: header.seed,
            val_fraction: header.val_fraction,
            epoch: header.epoch,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::fsutil::write_atomic(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

fn split_header(bytes: &[u8]) -> Result<(CheckpointHeader, &[u8])> {
    if bytes.len() < 10 {
        return Err(Error::Format(format!(
            "{} bytes is too short for a checkpoint",
            bytes.len()
        )));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Format("bad magic bytes".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported format version {version}"
        )));
    }
    let len = u32::from_le_bytes([bytes[6], bytes[7], bytes[8], bytes[9]]) as usize;
    let body = &bytes[10..];
    if body.len() < len {
        return Err(Error::Format(format!(
            "header claims {len} bytes, only {} present",
            body.len()
        )));
    }
    let header: CheckpointHeader =
        serde_json::from_slice(&body[..len]).map_err(|e| Error::Format(format!("header: {e}")))?;
    Ok((header, &body[len..]))
}

/// Reads only the header of a checkpoint file.
pub fn read_header(path: &Path) -> Result<CheckpointHeader> {
    let mut file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut prefix = [0u8; 10];
    let got = read_up_to(&mut file, &mut prefix).map_err(|e| Error::io(path, e))?;
    let len = if got == 10 {
        u32::from_le_bytes([prefix[6], prefix[7], prefix[8], prefix[9]]) as usize
    } else {
        0
    };
    let mut bytes = prefix[..got].to_vec();
    bytes.resize(got + len, 0);
    let more = read_up_to(&mut file, &mut bytes[got..]).map_err(|e| Error::io(path, e))?;
    bytes.truncate(got + more);
    split_header(&bytes).map(|(h, _)| h)
}

fn read_up_to(r: &mut impl Read, buf: &mut [u8]) -> std::io::Result<usize> {
    let mut n = 0;
    while n < buf.len() {
        match r.read(&mut buf[n..])? {
            0 => break,
            k => n += k,
        }
    }
    Ok(n)
}
