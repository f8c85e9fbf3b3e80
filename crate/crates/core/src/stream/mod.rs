//! Prefix-decodable binary container for model parameters.
//!
//! Layout, all little-endian:
//!
//! ```text
//! header (24 bytes)
//!   magic "TMLP" | version u16 | architecture u8 | input_dim u16 |
//!   output_dim u16 | hidden_width u16 | num_layers u16 | omega0 f32 |
//!   dtype u8 | CRC-32 of the preceding 20 bytes
//! one chunk per hidden layer, in order
//!   layer_index u16 (from 1) | payload_len u32 | payload | CRC-32 of payload
//! ```
//!
//! A chunk's payload is the layer's weights and bias followed by its head
//! factors, each row-major `f32`. Any prefix holding `j` complete chunks
//! decodes to the model truncated to `j` layers.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::model::{Architecture, ModelConfig, ModelParams};
use crate::numerics::Scalar;

pub const MAGIC: [u8; 4] = *b"TMLP";
pub const FORMAT_VERSION: u16 = 1;
pub const HEADER_LEN: usize = 24;
/// Index, length and CRC fields around every payload.
pub const CHUNK_OVERHEAD: usize = 10;
const DTYPE_F32: u8 = 0;
const VALUE_BYTES: usize = 4;

/// Fixed-size container header.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContainerHeader {
    pub architecture: Architecture,
    pub input_dim: u16,
    pub output_dim: u16,
    pub hidden_width: u16,
    pub num_layers: u16,
    pub omega0: f32,
}

fn dim_u16(name: &str, v: usize) -> Result<u16> {
    u16::try_from(v).map_err(|_| {
        Error::InvalidConfig(format!(
            "{name} = {v} does not fit the container's u16 field"
        ))
    })
}

impl ContainerHeader {
    pub fn from_config(config: &ModelConfig) -> Result<Self> {
        Ok(ContainerHeader {
            architecture: config.architecture,
            input_dim: dim_u16("input_dim", config.input_dim)?,
            output_dim: dim_u16("output_dim", config.output_dim)?,
            hidden_width: dim_u16("hidden_width", config.hidden_width)?,
            num_layers: dim_u16("num_hidden_layers", config.num_hidden_layers)?,
            omega0: config.omega0 as f32,
        })
    }

    /// Model configuration for the first `layers` layers. The seed is not
    /// stored in the container and comes back as 0.
    pub fn model_config(&self, layers: usize) -> ModelConfig {
        ModelConfig {
            input_dim: self.input_dim.into(),
            output_dim: self.output_dim.into(),
            hidden_width: self.hidden_width.into(),
            num_hidden_layers: layers,
            omega0: self.omega0.into(),
            architecture: self.architecture,
            seed: 0,
        }
    }

    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[0..4].copy_from_slice(&MAGIC);
        out[4..6].copy_from_slice(&FORMAT_VERSION.to_le_bytes());
        out[6] = self.architecture.id();
        out[7..9].copy_from_slice(&self.input_dim.to_le_bytes());
        out[9..11].copy_from_slice(&self.output_dim.to_le_bytes());
        out[11..13].copy_from_slice(&self.hidden_width.to_le_bytes());
        out[13..15].copy_from_slice(&self.num_layers.to_le_bytes());
        out[15..19].copy_from_slice(&self.omega0.to_le_bytes());
        out[19] = DTYPE_F32;
        let crc = crc32fast::hash(&out[..20]);
        out[20..24].copy_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn parse(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Format(format!(
                "truncated header: {} of {HEADER_LEN} bytes",
                bytes.len()
            )));
        }
        if bytes[0..4] != MAGIC {
            return Err(Error::Format("bad magic, not a TMLP container".into()));
        }
        let u16_at = |i: usize| u16::from_le_bytes([bytes[i], bytes[i + 1]]);
        let version = u16_at(4);
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported format version {version}"
            )));
        }
        let stored = u32::from_le_bytes(bytes[20..24].try_into().expect("4 bytes"));
        if crc32fast::hash(&bytes[..20]) != stored {
            return Err(Error::Integrity("header: CRC mismatch".into()));
        }
        let architecture = Architecture::from_id(bytes[6])
            .ok_or_else(|| Error::Format(format!("unknown architecture id {}", bytes[6])))?;
        if bytes[19] != DTYPE_F32 {
            return Err(Error::Format(format!(
                "unsupported value dtype {}",
                bytes[19]
            )));
        }
        let header = ContainerHeader {
            architecture,
            input_dim: u16_at(7),
            output_dim: u16_at(9),
            hidden_width: u16_at(11),
            num_layers: u16_at(13),
            omega0: f32::from_le_bytes(bytes[15..19].try_into().expect("4 bytes")),
        };
        if header.input_dim == 0
            || header.output_dim == 0
            || header.hidden_width == 0
            || header.num_layers == 0
        {
            return Err(Error::Format("zero dimension in header".into()));
        }
        if !(header.omega0.is_finite() && header.omega0 > 0.0) {
            return Err(Error::Format(format!("invalid omega0 {}", header.omega0)));
        }
        Ok(header)
    }

    /// Payload bytes of the chunk for `layer` (1-based).
    pub fn payload_len(&self, layer: usize) -> usize {
        let config = self.model_config(self.num_layers.into());
        config.layer_param_count(layer) * VALUE_BYTES
    }

    /// Total bytes needed to decode the first `layers` layers.
    pub fn prefix_len(&self, layers: usize) -> usize {
        HEADER_LEN
            + (1..=layers)
                .map(|l| CHUNK_OVERHEAD + self.payload_len(l))
                .sum::<usize>()
    }
}

/// Serialises a model, casting every parameter to `f32`.
pub fn encode<T: Scalar>(params: &ModelParams<T>) -> Result<Vec<u8>> {
    let header = ContainerHeader::from_config(params.config())?;
    let mut out = Vec::with_capacity(header.prefix_len(params.num_layers()));
    out.extend_from_slice(&header.to_bytes());
    for (i, slots) in params.layout().layers().iter().enumerate() {
        let index = i + 1;
        let payload: Vec<u8> = params.values()[slots.span.clone()]
            .iter()
            .flat_map(|v| (v.as_f64() as f32).to_le_bytes())
            .collect();
        out.extend_from_slice(&(index as u16).to_le_bytes());
        out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&payload);
        out.extend_from_slice(&crc32fast::hash(&payload).to_le_bytes());
    }
    Ok(out)
}

/// Where one chunk sits in a container.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChunkInfo {
    pub layer_index: u16,
    /// The whole chunk including its framing fields.
    pub range: Range<usize>,
    pub payload: Range<usize>,
}

/// Lazily walks chunk framing after the header without reading payloads.
/// Iteration ends at the first chunk that is not entirely present.
pub struct ChunkIter<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl Iterator for ChunkIter<'_> {
    type Item = ChunkInfo;

    fn next(&mut self) -> Option<ChunkInfo> {
        let start = self.offset;
        let frame = self.bytes.get(start..start + 6)?;
        let layer_index = u16::from_le_bytes([frame[0], frame[1]]);
        let len = u32::from_le_bytes(frame[2..6].try_into().expect("4 bytes")) as usize;
        let end = start.checked_add(CHUNK_OVERHEAD)?.checked_add(len)?;
        if end > self.bytes.len() {
            return None;
        }
        self.offset = end;
        Some(ChunkInfo {
            layer_index,
            range: start..end,
            payload: start + 6..end - 4,
        })
    }
}

/// Chunk boundaries of a container. Fails only when the header is unusable.
pub fn chunk_iter(bytes: &[u8]) -> Result<ChunkIter<'_>> {
    ContainerHeader::parse(bytes)?;
    Ok(ChunkIter {
        bytes,
        offset: HEADER_LEN,
    })
}

/// Decodes the longest valid prefix of at most `max_layers` layers (all
/// layers when `None`). Returns the model and the number of layers `j`.
///
/// Chunks after the last complete one are ignored, so a partially received
/// stream decodes to its complete layers. A damaged chunk within the
/// requested range is an integrity error naming that chunk.
pub fn decode_prefix(bytes: &[u8], max_layers: Option<usize>) -> Result<(ModelParams<f32>, usize)> {
    let header = ContainerHeader::parse(bytes)?;
    let k = usize::from(header.num_layers);
    let wanted = match max_layers {
        Some(0) => return Err(Error::InvalidConfig("max_layers must be at least 1".into())),
        Some(m) => m.min(k),
        None => k,
    };
    let mut values = Vec::new();
    let mut layers = 0;
    let mut offset = HEADER_LEN;
    while layers < wanted {
        let layer = layers + 1;
        // Framing is checked against the header as soon as it arrives, so a
        // damaged length field cannot pass for a stream that simply ended.
        let Some(frame) = bytes.get(offset..offset + 6) else {
            break;
        };
        let index = u16::from_le_bytes([frame[0], frame[1]]);
        if usize::from(index) != layer {
            return Err(Error::Integrity(format!(
                "chunk {layer}: layer index field reads {index}"
            )));
        }
        let len = u32::from_le_bytes(frame[2..6].try_into().expect("4 bytes")) as usize;
        let expected = header.payload_len(layer);
        if len != expected {
            return Err(Error::Integrity(format!(
                "chunk {layer}: payload length {len} but the header implies {expected}"
            )));
        }
        let end = offset + CHUNK_OVERHEAD + len;
        if end > bytes.len() {
            break;
        }
        let payload = &bytes[offset + 6..end - 4];
        let stored = u32::from_le_bytes(bytes[end - 4..end].try_into().expect("4 bytes"));
        if crc32fast::hash(payload) != stored {
            return Err(Error::Integrity(format!("chunk {layer}: CRC mismatch")));
        }
        values.extend(
            payload
                .chunks_exact(VALUE_BYTES)
                .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes"))),
        );
        layers = layer;
        offset = end;
    }
    if layers == 0 {
        return Err(Error::Underflow);
    }
    if layers < k && !header.architecture.is_tailed() {
        return Err(Error::InvalidConfig(format!(
            "{} has no head before layer {k}; only {layers} layers are present",
            header.architecture
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Format("non-finite parameter value".into()));
    }
    let params = ModelParams::from_values(header.model_config(layers), values)?;
    Ok((params, layers))
}
