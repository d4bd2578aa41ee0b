//! Versioned checkpoint container.
//!
//! Layout: `TFRCKPT\0` magic, `u32` format version, a length-prefixed UTF-8
//! `key=value` header (dimensions, quantile levels, scaler, country table,
//! free-form metadata), then every parameter tensor in declared order as
//! `u64 rows, u64 cols, rows·cols × f64`, all little-endian.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use super::params::{ModelConfig, ModelParams};
use super::quantiles::QUANTILE_LEVELS;
use crate::error::{Error, Result};
use crate::transform::{CountryIndex, GlobalScaler};

const MAGIC: &[u8; 8] = b"TFRCKPT\0";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub scaler: GlobalScaler,
    pub countries: CountryIndex,
    /// Training provenance (seed, config hash, ...).
    pub meta: BTreeMap<String, String>,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let c = self.params.config;
        let mut header = String::new();
        let mut kv = |k: &str, v: String| {
            header.push_str(k);
            header.push('=');
            header.push_str(&v);
            header.push('\n');
        };
        kv("n_countries", c.n_countries.to_string());
        kv("d_emb", c.d_emb.to_string());
        kv("hidden_dim", c.hidden_dim.to_string());
        kv("n_layers", c.n_layers.to_string());
        kv("l_enc", c.l_enc.to_string());
        kv("l_pred", c.l_pred.to_string());
        kv(
            "quantiles",
            QUANTILE_LEVELS.iter().map(|q| format!("{q:?}")).collect::<Vec<_>>().join(","),
        );
        kv("scaler_mu", format!("{:?}", self.scaler.mu));
        kv("scaler_sigma", format!("{:?}", self.scaler.sigma));
        kv("countries", self.countries.codes().join(","));
        for (k, v) in &self.meta {
            kv(&format!("meta.{k}"), v.replace('\n', " "));
        }

        let mut buf = Vec::new();
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        buf.extend_from_slice(&(header.len() as u64).to_le_bytes());
        buf.extend_from_slice(header.as_bytes());
        let tensors = self.params.tensors();
        buf.extend_from_slice(&(tensors.len() as u64).to_le_bytes());
        for t in tensors {
            buf.extend_from_slice(&(t.rows() as u64).to_le_bytes());
            buf.extend_from_slice(&(t.cols() as u64).to_le_bytes());
            for v in t.as_slice() {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        buf
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Checkpoint(m.to_string());
        let mut pos = 0usize;
        let mut take = |n: usize| -> Result<&[u8]> {
            let end = pos + n;
            if end > buf.len() {
                return Err(bad("truncated checkpoint"));
            }
            let s = &buf[pos..end];
            pos = end;
            Ok(s)
        };
        if take(8)? != MAGIC {
            return Err(bad("not a checkpoint file"));
        }
        let version = u32::from_le_bytes(take(4)?.try_into().unwrap());
        if version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported checkpoint version {version}")));
        }
        let hlen = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
        let header = std::str::from_utf8(take(hlen)?).map_err(|_| bad("header is not UTF-8"))?;
        let mut fields = BTreeMap::new();
        for line in header.lines() {
            let (k, v) = line.split_once('=').ok_or_else(|| bad("malformed header line"))?;
            fields.insert(k.to_string(), v.to_string());
        }
        let get = |k: &str| fields.get(k).ok_or_else(|| Error::Checkpoint(format!("missing `{k}`")));
        let usize_of = |k: &str| -> Result<usize> {
            get(k)?.parse().map_err(|_| Error::Checkpoint(format!("bad `{k}`")))
        };
        let f64_of = |k: &str| -> Result<f64> {
            get(k)?.parse().map_err(|_| Error::Checkpoint(format!("bad `{k}`")))
        };
        let config = ModelConfig {
            n_countries: usize_of("n_countries")?,
            d_emb: usize_of("d_emb")?,
            hidden_dim: usize_of("hidden_dim")?,
            n_layers: usize_of("n_layers")?,
            l_enc: usize_of("l_enc")?,
            l_pred: usize_of("l_pred")?,
        };
        let levels: Vec<f64> = get("quantiles")?
            .split(',')
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad("bad quantile levels"))?;
        if levels != QUANTILE_LEVELS {
            return Err(bad("checkpoint quantile levels differ from this build"));
        }
        let scaler = GlobalScaler::new(f64_of("scaler_mu")?, f64_of("scaler_sigma")?)?;
        let codes: Vec<String> = get("countries")?
            .split(',')
            .filter(|s| !s.is_empty())
            .map(String::from)
            .collect();
        if codes.len() != config.n_countries {
            return Err(bad("country table size differs from n_countries"));
        }
        let meta = fields
            .iter()
            .filter_map(|(k, v)| k.strip_prefix("meta.").map(|k| (k.to_string(), v.clone())))
            .collect();

        let mut params = ModelParams::zeros(config);
        let count = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
        if count != params.tensors().len() {
            return Err(bad("tensor count does not match architecture"));
        }
        for t in params.tensors_mut() {
            let rows = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
            let cols = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
            if (rows, cols) != t.shape() {
                return Err(Error::Checkpoint(format!(
                    "tensor shape {rows}x{cols}, expected {:?}",
                    t.shape()
                )));
            }
            for v in t.as_mut_slice() {
                *v = f64::from_le_bytes(take(8)?.try_into().unwrap());
            }
        }
        if pos != buf.len() {
            return Err(bad("trailing bytes after tensors"));
        }
        Ok(Checkpoint {
            params,
            scaler,
            countries: CountryIndex::from_ordered(codes),
            meta,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let buf = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Checkpoint::from_bytes(&buf)
    }
}
