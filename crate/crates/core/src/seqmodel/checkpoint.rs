//! Model checkpoint file.
//!
//! ```text
//! {"config":{...},"vocabulary":[...]}\n     JSON header line
//! b"WPM1"                                   magic
//! parameters  : u32 count, then per tensor u32 rows, u32 cols, rows*cols f64
//! u64 optimizer step
//! first moments, second moments : same layout as parameters
//! u32 CRC-32 of every preceding byte
//! ```
//!
//! All integers and floats are little-endian; vectors are stored as one row.

use std::io::{self, Read, Write};

use serde::{Deserialize, Serialize};

use super::params::Parameters;
use super::{AdamState, ModelConfig, ModelError, SequenceModel};
use crate::scalar::Scalar;

const MAGIC: &[u8; 4] = b"WPM1";

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("bad checkpoint header: {0}")]
    Header(String),
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
    #[error("checksum mismatch: stored {stored:08x}, computed {computed:08x}")]
    Checksum { stored: u32, computed: u32 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    config: ModelConfig,
    vocabulary: Vec<String>,
}

/// A model together with the edition codes behind its language indices.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint<T> {
    pub model: SequenceModel<T>,
    /// `vocabulary[i - 1]` names language index `i`; index 0 is padding.
    pub vocabulary: Vec<String>,
}

fn put_tensors<T: Scalar>(buf: &mut Vec<u8>, params: &Parameters<T>) {
    let shapes = params.shapes();
    buf.extend_from_slice(&(shapes.len() as u32).to_le_bytes());
    for ((rows, cols), data) in shapes.into_iter().zip(params.tensors()) {
        buf.extend_from_slice(&(rows as u32).to_le_bytes());
        buf.extend_from_slice(&(cols as u32).to_le_bytes());
        for v in data {
            buf.extend_from_slice(&v.as_f64().to_le_bytes());
        }
    }
}

pub fn write_checkpoint<T: Scalar, W: Write>(
    model: &SequenceModel<T>,
    vocabulary: &[String],
    mut out: W,
) -> io::Result<()> {
    let header = serde_json::to_string(&Header {
        config: model.config.clone(),
        vocabulary: vocabulary.to_vec(),
    })?;
    let mut buf = Vec::with_capacity(header.len() + 1 + 24 * model.params.len());
    buf.extend_from_slice(header.as_bytes());
    buf.push(b'\n');
    buf.extend_from_slice(MAGIC);
    put_tensors(&mut buf, &model.params);
    buf.extend_from_slice(&model.optimizer.step.to_le_bytes());
    put_tensors(&mut buf, &model.optimizer.m);
    put_tensors(&mut buf, &model.optimizer.v);
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    out.write_all(&buf)?;
    out.flush()
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&end| end <= self.bytes.len())
            .ok_or_else(|| CheckpointError::Corrupt("unexpected end of data".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn tensors<T: Scalar>(&mut self, into: &mut Parameters<T>) -> Result<(), CheckpointError> {
        let shapes = into.shapes();
        let count = self.u32()? as usize;
        if count != shapes.len() {
            return Err(CheckpointError::Corrupt(format!(
                "expected {} tensors, found {count}",
                shapes.len()
            )));
        }
        for ((rows, cols), dst) in shapes.into_iter().zip(into.tensors_mut()) {
            let (r, c) = (self.u32()? as usize, self.u32()? as usize);
            if (r, c) != (rows, cols) {
                return Err(CheckpointError::Corrupt(format!(
                    "tensor shape {r}x{c} does not match configuration ({rows}x{cols})"
                )));
            }
            let raw = self.take(r * c * 8)?;
            for (d, chunk) in dst.iter_mut().zip(raw.chunks_exact(8)) {
                let v = f64::from_le_bytes(chunk.try_into().expect("8 bytes"));
                if !v.is_finite() {
                    return Err(CheckpointError::Corrupt("non-finite value".into()));
                }
                *d = T::of(v);
            }
        }
        Ok(())
    }
}

pub fn read_checkpoint<T: Scalar, R: Read>(mut input: R) -> Result<Checkpoint<T>, CheckpointError> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() < 4 {
        return Err(CheckpointError::Corrupt("file too short".into()));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().expect("4 bytes"));
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(CheckpointError::Checksum { stored, computed });
    }

    let newline = body
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| CheckpointError::Header("missing header line".into()))?;
    let header: Header = serde_json::from_slice(&body[..newline])
        .map_err(|e| CheckpointError::Header(e.to_string()))?;
    header.config.validate()?;
    if header.vocabulary.len() + 1 != header.config.vocab_size && !header.vocabulary.is_empty() {
        return Err(CheckpointError::Header(format!(
            "vocabulary of {} editions does not match vocab_size {}",
            header.vocabulary.len(),
            header.config.vocab_size
        )));
    }

    let mut cursor = Cursor {
        bytes: body,
        pos: newline + 1,
    };
    if cursor.take(4)? != MAGIC {
        return Err(CheckpointError::Corrupt("bad magic".into()));
    }
    let mut model = SequenceModel::<T>::zeroed(&header.config)?;
    cursor.tensors(&mut model.params)?;
    let step = cursor.u64()?;
    let mut optimizer = AdamState::new(&model.params);
    optimizer.step = step;
    cursor.tensors(&mut optimizer.m)?;
    cursor.tensors(&mut optimizer.v)?;
    if cursor.pos != body.len() {
        return Err(CheckpointError::Corrupt("trailing bytes".into()));
    }
    model.optimizer = optimizer;
    Ok(Checkpoint {
        model,
        vocabulary: header.vocabulary,
    })
}
