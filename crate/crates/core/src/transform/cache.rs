//! Binary window cache: `TFRWIN` magic, format version, 32-byte key, then
//! little-endian payload. A cache whose key differs from the requested one is
//! treated as stale.

use std::io::{Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use super::windows::{StandardizedPanel, WindowSample, WindowSet, N_FEATURES};
use crate::error::{Error, Result};
use crate::numerics::Matrix;

const MAGIC: &[u8; 6] = b"TFRWIN";
pub const CACHE_VERSION: u32 = 1;

pub type CacheKey = [u8; 32];

/// Hash of the standardized panel content plus a free-form config string.
pub fn cache_key(panel: &StandardizedPanel, config: &str) -> CacheKey {
    let mut h = Sha256::new();
    h.update(panel.scaler.mu.to_le_bytes());
    h.update(panel.scaler.sigma.to_le_bytes());
    for s in &panel.series {
        h.update(s.country_code.as_bytes());
        h.update((s.country_id as u64).to_le_bytes());
        h.update(s.first_year.to_le_bytes());
        for z in &s.z {
            h.update(z.to_le_bytes());
        }
    }
    h.update(config.as_bytes());
    h.finalize().into()
}

pub fn write_cache(path: &Path, key: &CacheKey, set: &WindowSet) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&CACHE_VERSION.to_le_bytes());
    buf.extend_from_slice(key);
    buf.extend_from_slice(&(set.l_enc as u64).to_le_bytes());
    buf.extend_from_slice(&(set.l_pred as u64).to_le_bytes());
    buf.extend_from_slice(&(set.samples.len() as u64).to_le_bytes());
    for w in &set.samples {
        buf.extend_from_slice(&(w.country_id as u64).to_le_bytes());
        buf.extend_from_slice(&w.origin_year.to_le_bytes());
        buf.push(u8::from(w.augmented));
        for v in w.encoder_input.as_slice().iter().chain(&w.target) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos + n;
        if end > self.buf.len() {
            return Err(Error::Checkpoint("window cache truncated".into()));
        }
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// `Ok(None)` when the file is missing, has another version, or another key.
pub fn read_cache(path: &Path, key: &CacheKey) -> Result<Option<WindowSet>> {
    let mut buf = Vec::new();
    match std::fs::File::open(path) {
        Ok(mut f) => f.read_to_end(&mut buf).map_err(|e| Error::io(path, e))?,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(Error::io(path, e)),
    };
    let mut c = Cursor { buf: &buf, pos: 0 };
    if c.take(6)? != MAGIC {
        return Err(Error::Checkpoint(format!("{}: not a window cache", path.display())));
    }
    let version = u32::from_le_bytes(c.take(4)?.try_into().unwrap());
    if version != CACHE_VERSION || c.take(32)? != key {
        return Ok(None);
    }
    let l_enc = c.u64()? as usize;
    let l_pred = c.u64()? as usize;
    let n = c.u64()? as usize;
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        let country_id = c.u64()? as usize;
        let origin_year = i32::from_le_bytes(c.take(4)?.try_into().unwrap());
        let augmented = c.take(1)?[0] != 0;
        let enc = (0..l_enc * N_FEATURES).map(|_| c.f64()).collect::<Result<Vec<_>>>()?;
        let target = (0..l_pred).map(|_| c.f64()).collect::<Result<Vec<_>>>()?;
        samples.push(WindowSample {
            country_id,
            origin_year,
            encoder_input: Matrix::from_vec(l_enc, N_FEATURES, enc)?,
            target,
            augmented,
        });
    }
    Ok(Some(WindowSet {
        l_enc,
        l_pred,
        samples,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::scaler::GlobalScaler;
    use crate::transform::windows::{make_windows, CountryIndex, StandardizedSeries};

    fn panel(shift: f64) -> StandardizedPanel {
        StandardizedPanel {
            scaler: GlobalScaler::new(0.5, 0.3).unwrap(),
            index: CountryIndex::new(["A".into()]),
            series: vec![StandardizedSeries {
                country_id: 0,
                country_code: "A".into(),
                first_year: 1950,
                z: (0..40).map(|i| (i as f64 * 0.2).cos() + shift).collect(),
            }],
        }
    }

    #[test]
    fn round_trip_and_invalidation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.bin");
        let p = panel(0.0);
        let set = make_windows(&p, 8, 4, 1).unwrap();
        let key = cache_key(&p, "l_enc=8,l_pred=4");
        write_cache(&path, &key, &set).unwrap();
        assert_eq!(read_cache(&path, &key).unwrap(), Some(set));

        let other_panel = cache_key(&panel(1e-9), "l_enc=8,l_pred=4");
        assert_eq!(read_cache(&path, &other_panel).unwrap(), None);
        let other_cfg = cache_key(&p, "l_enc=9,l_pred=4");
        assert_eq!(read_cache(&path, &other_cfg).unwrap(), None);
        assert_eq!(read_cache(&dir.path().join("missing.bin"), &key).unwrap(), None);
    }
}
