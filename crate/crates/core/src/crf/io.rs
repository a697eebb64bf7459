//! Binary model container and its text manifest.
//!
//! Layout: 8-byte magic, one endianness byte (`L` or `B`), then in that
//! byte order: format version (u32), labels (u32), sparse space (u64),
//! embedding width (u64), hidden width (u64), hidden layers (u32), window
//! (u32), hash bits (u32). Parameter arrays follow as f64 in row-major
//! order: per hidden layer its weights then bias, the emission matrix, the
//! transition matrix, start and stop scores. An FNV-1a checksum (u64) of
//! everything before it closes the file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::features::FeatureConfig;
use super::model::{CrfParams, ModelShape};
use super::train::TrainConfig;
use super::CrfModel;
use crate::error::{Error, Result};
use crate::hash::fnv1a;
use crate::span::Label;

pub const MAGIC: &[u8; 8] = b"TXSPCRF\0";
pub const MODEL_VERSION: u32 = 1;
const MAX_HASH_BITS: u32 = 28;
const MAX_WIDTH: u64 = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Endian {
    Little,
    Big,
}

impl Endian {
    fn tag(self) -> u8 {
        match self {
            Endian::Little => b'L',
            Endian::Big => b'B',
        }
    }
}

struct Writer {
    buf: Vec<u8>,
    endian: Endian,
}

impl Writer {
    fn u32(&mut self, x: u32) {
        let b = match self.endian {
            Endian::Little => x.to_le_bytes(),
            Endian::Big => x.to_be_bytes(),
        };
        self.buf.extend_from_slice(&b);
    }

    fn u64(&mut self, x: u64) {
        let b = match self.endian {
            Endian::Little => x.to_le_bytes(),
            Endian::Big => x.to_be_bytes(),
        };
        self.buf.extend_from_slice(&b);
    }

    fn f64s(&mut self, xs: &[f64]) {
        for x in xs {
            self.u64(x.to_bits());
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    endian: Endian,
}

fn corrupt(msg: impl std::fmt::Display) -> Error {
    Error::Data(format!("model file: {msg}"))
}

impl<'a> Reader<'a> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos.checked_add(N).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| corrupt(format!("truncated at byte {}", self.pos)))?;
        let mut out = [0u8; N];
        out.copy_from_slice(&self.bytes[self.pos..end]);
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take::<4>()?;
        Ok(match self.endian {
            Endian::Little => u32::from_le_bytes(b),
            Endian::Big => u32::from_be_bytes(b),
        })
    }

    fn u64(&mut self) -> Result<u64> {
        let b = self.take::<8>()?;
        Ok(match self.endian {
            Endian::Little => u64::from_le_bytes(b),
            Endian::Big => u64::from_be_bytes(b),
        })
    }

    fn f64s(&mut self, out: &mut [f64]) -> Result<()> {
        for x in out.iter_mut() {
            *x = f64::from_bits(self.u64()?);
        }
        Ok(())
    }
}

pub fn encode_model(model: &CrfModel, endian: Endian) -> Vec<u8> {
    let s = &model.params.shape;
    let mut w = Writer {
        buf: Vec::with_capacity(64 + 8 * model.params.n_params()),
        endian,
    };
    w.buf.extend_from_slice(MAGIC);
    w.buf.push(endian.tag());
    w.u32(MODEL_VERSION);
    w.u32(s.n_labels as u32);
    w.u64(s.n_sparse as u64);
    w.u64(s.n_dense as u64);
    w.u64(s.hidden_width as u64);
    w.u32(s.hidden_layers as u32);
    w.u32(model.features.window as u32);
    w.u32(model.features.hash_bits);
    for a in model.params.arrays() {
        w.f64s(a);
    }
    let sum = fnv1a(&w.buf);
    w.u64(sum);
    w.buf
}

/// Parses a model container. Every size is checked against the header
/// limits and the actual byte count before anything is allocated.
pub fn decode_model(bytes: &[u8]) -> Result<CrfModel> {
    if bytes.len() < MAGIC.len() + 1 || &bytes[..MAGIC.len()] != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let endian = match bytes[MAGIC.len()] {
        b'L' => Endian::Little,
        b'B' => Endian::Big,
        other => return Err(corrupt(format!("unknown endianness tag 0x{other:02x}"))),
    };
    let mut r = Reader {
        bytes,
        pos: MAGIC.len() + 1,
        endian,
    };
    let version = r.u32()?;
    if version != MODEL_VERSION {
        return Err(corrupt(format!(
            "format version {version}, this build reads {MODEL_VERSION}"
        )));
    }
    let labels = r.u32()?;
    let n_sparse = r.u64()?;
    let n_dense = r.u64()?;
    let hidden_width = r.u64()?;
    let hidden_layers = r.u32()?;
    let window = r.u32()?;
    let hash_bits = r.u32()?;
    if labels as usize != Label::COUNT {
        return Err(corrupt(format!("{labels} labels, expected {}", Label::COUNT)));
    }
    if !(1..=MAX_HASH_BITS).contains(&hash_bits) || n_sparse != 1u64 << hash_bits {
        return Err(corrupt(format!(
            "sparse space {n_sparse} does not match hash bits {hash_bits}"
        )));
    }
    if n_dense > MAX_WIDTH || hidden_width > MAX_WIDTH || window as u64 > MAX_WIDTH {
        return Err(corrupt("dimension exceeds limits"));
    }
    let shape = ModelShape::new(
        n_sparse as usize,
        n_dense as usize,
        hidden_width as usize,
        hidden_layers as usize,
    );
    shape.validate().map_err(corrupt)?;

    let input = n_sparse + n_dense;
    let mut count: u64 = 0;
    let mut n_in = input;
    for _ in 0..hidden_layers {
        count += hidden_width * n_in + hidden_width;
        n_in = hidden_width;
    }
    let l = Label::COUNT as u64;
    count += l * n_in + l * l + 2 * l;
    let expected = (r.pos as u64) + 8 * count + 8;
    if bytes.len() as u64 != expected {
        return Err(corrupt(format!(
            "{} bytes, header implies {expected}",
            bytes.len()
        )));
    }

    let mut params = CrfParams::zeros(shape);
    for a in params.arrays_mut() {
        r.f64s(a)?;
    }
    let body_end = r.pos;
    let sum = r.u64()?;
    if sum != fnv1a(&bytes[..body_end]) {
        return Err(corrupt("checksum mismatch"));
    }
    if !params.is_finite() {
        return Err(corrupt("non-finite weights"));
    }
    Ok(CrfModel {
        features: FeatureConfig {
            hash_bits,
            window: window as usize,
        },
        params,
    })
}

/// Training record written next to a model file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub seed: u64,
    pub features: FeatureConfig,
    pub shape: ModelShape,
    pub train: TrainConfig,
    pub training_rows: usize,
    pub loss_trace: Vec<f64>,
}

pub fn manifest_path(model: &Path) -> PathBuf {
    let mut s = model.as_os_str().to_owned();
    s.push(".manifest");
    PathBuf::from(s)
}

pub fn save_model(path: &Path, model: &CrfModel, manifest: Option<&Manifest>) -> Result<()> {
    std::fs::write(path, encode_model(model, Endian::Little)).map_err(|e| Error::io(path, e))?;
    if let Some(m) = manifest {
        let text = toml::to_string(m)
            .map_err(|e| Error::Validation(format!("cannot serialize manifest: {e}")))?;
        let mp = manifest_path(path);
        std::fs::write(&mp, text).map_err(|e| Error::io(&mp, e))?;
    }
    Ok(())
}

pub fn load_model(path: &Path) -> Result<CrfModel> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes)
}

pub fn load_manifest(model_path: &Path) -> Result<Manifest> {
    let mp = manifest_path(model_path);
    let text = std::fs::read_to_string(&mp).map_err(|e| Error::io(&mp, e))?;
    toml::from_str(&text).map_err(|e| Error::Data(format!("{}: {e}", mp.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model(layers: usize) -> CrfModel {
        let features = FeatureConfig {
            hash_bits: 4,
            window: 1,
        };
        let mut params = CrfParams::zeros(ModelShape::new(16, 3, 2, layers));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for a in params.arrays_mut() {
            a.iter_mut().for_each(|x| *x = rng.gen_range(-3.0..3.0));
        }
        CrfModel { features, params }
    }

    #[test]
    fn round_trip_both_byte_orders() {
        for layers in 0..=2 {
            let m = model(layers);
            for endian in [Endian::Little, Endian::Big] {
                let bytes = encode_model(&m, endian);
                assert_eq!(decode_model(&bytes).unwrap(), m);
            }
        }
        assert_ne!(
            encode_model(&model(1), Endian::Little),
            encode_model(&model(1), Endian::Big)
        );
    }

    #[test]
    fn rejects_damage() {
        let bytes = encode_model(&model(1), Endian::Little);
        assert!(decode_model(&bytes[..bytes.len() - 1]).is_err());
        assert!(decode_model(&bytes[..20]).is_err());
        assert!(decode_model(b"").is_err());
        let mut flipped = bytes.clone();
        flipped[60] ^= 1;
        assert!(decode_model(&flipped).is_err());
        let mut tag = bytes.clone();
        tag[8] = b'X';
        assert!(decode_model(&tag).is_err());
    }

    #[test]
    fn huge_header_does_not_allocate() {
        let mut bytes = encode_model(&model(0), Endian::Little);
        // Hidden width field sits after magic, tag, version, labels, sparse, dense.
        let off = 8 + 1 + 4 + 4 + 8 + 8;
        bytes[off..off + 8].copy_from_slice(&u64::MAX.to_le_bytes());
        assert!(decode_model(&bytes).is_err());
    }

    #[test]
    fn save_and_load_with_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.crf");
        let m = model(1);
        let manifest = Manifest {
            format_version: MODEL_VERSION,
            seed: 9,
            features: m.features,
            shape: m.params.shape,
            train: TrainConfig::default(),
            training_rows: 12,
            loss_trace: vec![1.5, 1.25],
        };
        save_model(&path, &m, Some(&manifest)).unwrap();
        assert_eq!(load_model(&path).unwrap(), m);
        assert_eq!(load_manifest(&path).unwrap(), manifest);
    }
}
