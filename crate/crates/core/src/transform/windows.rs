use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::scaler::GlobalScaler;
use crate::error::{Error, Result};
use crate::ingest::HarmonizedPanel;
use crate::numerics::Matrix;

/// Lags (in years) of the four encoder features: current value and 2, 4, 6 years back.
pub const LAGS: [usize; 4] = [0, 2, 4, 6];
pub const N_FEATURES: usize = LAGS.len();
pub const MAX_LAG: usize = 6;

/// Stable country-code → integer id table (ids follow sorted code order).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountryIndex {
    codes: Vec<String>,
}

impl CountryIndex {
    pub fn new(codes: impl IntoIterator<Item = String>) -> Self {
        let mut codes: Vec<String> = codes.into_iter().collect();
        codes.sort();
        codes.dedup();
        CountryIndex { codes }
    }

    pub fn from_panel(panel: &HarmonizedPanel) -> Self {
        CountryIndex::new(panel.series.keys().cloned())
    }

    /// Keeps codes in the given order (used when loading checkpoints).
    pub fn from_ordered(codes: Vec<String>) -> Self {
        CountryIndex { codes }
    }

    pub fn id(&self, code: &str) -> Option<usize> {
        self.codes.iter().position(|c| c == code)
    }

    pub fn code(&self, id: usize) -> Option<&str> {
        self.codes.get(id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn codes(&self) -> &[String] {
        &self.codes
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StandardizedSeries {
    pub country_id: usize,
    pub country_code: String,
    pub first_year: i32,
    pub z: Vec<f64>,
}

impl StandardizedSeries {
    pub fn last_year(&self) -> i32 {
        self.first_year + self.z.len() as i32 - 1
    }

    pub fn truncated_before(&self, cutoff: i32) -> StandardizedSeries {
        let keep = (cutoff - self.first_year).clamp(0, self.z.len() as i32) as usize;
        StandardizedSeries {
            z: self.z[..keep].to_vec(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StandardizedPanel {
    pub scaler: GlobalScaler,
    pub index: CountryIndex,
    pub series: Vec<StandardizedSeries>,
}

/// `z = (ln tfr − μ) / σ` for every cell. Countries missing from `index` are skipped.
pub fn log_standardize(
    panel: &HarmonizedPanel,
    scaler: GlobalScaler,
    index: &CountryIndex,
) -> Result<StandardizedPanel> {
    let mut series = Vec::new();
    for (code, s) in &panel.series {
        let Some(id) = index.id(code) else { continue };
        let z = s
            .values
            .iter()
            .map(|&v| scaler.standardize(v))
            .collect::<Result<Vec<_>>>()?;
        series.push(StandardizedSeries {
            country_id: id,
            country_code: code.clone(),
            first_year: s.first_year,
            z,
        });
    }
    series.sort_by_key(|s| s.country_id);
    Ok(StandardizedPanel {
        scaler,
        index: index.clone(),
        series,
    })
}

/// One supervised instance in standardized space.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSample {
    pub country_id: usize,
    /// Last encoder year `t`.
    pub origin_year: i32,
    /// `l_enc × 4`: z at year, year−2, year−4, year−6.
    pub encoder_input: Matrix,
    /// z at `t+1 ..= t+l_pred`.
    pub target: Vec<f64>,
    pub augmented: bool,
}

impl WindowSample {
    pub fn last_target_year(&self) -> i32 {
        self.origin_year + self.target.len() as i32
    }

    /// Earliest year any encoder cell reads from.
    pub fn first_input_year(&self) -> i32 {
        self.origin_year - self.encoder_input.rows() as i32 + 1 - MAX_LAG as i32
    }
}

/// Observed value `m` years before the origin (`0 ≤ m ≤ 6`), read back out of
/// the encoder feature matrix.
pub fn observed_lag(encoder_input: &Matrix, m: usize) -> f64 {
    debug_assert!(m <= MAX_LAG);
    let col = (m / 2).min(N_FEATURES - 1);
    let back = m - 2 * col;
    encoder_input.get(encoder_input.rows() - 1 - back, col)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowSet {
    pub l_enc: usize,
    pub l_pred: usize,
    pub samples: Vec<WindowSample>,
}

impl WindowSet {
    pub fn empty(l_enc: usize, l_pred: usize) -> Self {
        WindowSet {
            l_enc,
            l_pred,
            samples: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn augmented_count(&self) -> usize {
        self.samples.iter().filter(|s| s.augmented).count()
    }
}

/// Closed-form window count for a series of `n` usable years.
pub fn expected_window_count(n: usize, l_enc: usize, l_pred: usize) -> usize {
    (n + 1).saturating_sub(l_enc + MAX_LAG + l_pred)
}

/// Encoder features for the window whose origin sits at index `t` of `z`.
pub fn encoder_features(z: &[f64], t: usize, l_enc: usize) -> Matrix {
    Matrix::from_fn(l_enc, N_FEATURES, |row, col| {
        let p = t + 1 + row - l_enc;
        z[p - LAGS[col]]
    })
}

pub(crate) fn check_window_dims(l_enc: usize, l_pred: usize) -> Result<()> {
    if l_enc < MAX_LAG + 1 {
        return Err(Error::Config(format!("l_enc must be at least {}, got {l_enc}", MAX_LAG + 1)));
    }
    if l_pred < 1 {
        return Err(Error::Config("l_pred must be at least 1".into()));
    }
    Ok(())
}

/// All windows of one series with the given stride.
pub fn series_windows(
    s: &StandardizedSeries,
    l_enc: usize,
    l_pred: usize,
    stride: usize,
) -> Vec<WindowSample> {
    let n = s.z.len();
    let first_origin = l_enc + MAX_LAG - 1;
    if n < l_enc + MAX_LAG + l_pred {
        return Vec::new();
    }
    let last_origin = n - 1 - l_pred;
    (first_origin..=last_origin)
        .step_by(stride.max(1))
        .map(|t| WindowSample {
            country_id: s.country_id,
            origin_year: s.first_year + t as i32,
            encoder_input: encoder_features(&s.z, t, l_enc),
            target: s.z[t + 1..=t + l_pred].to_vec(),
            augmented: false,
        })
        .collect()
}

/// Sliding windows over every series of the panel.
pub fn make_windows(
    panel: &StandardizedPanel,
    l_enc: usize,
    l_pred: usize,
    stride: usize,
) -> Result<WindowSet> {
    check_window_dims(l_enc, l_pred)?;
    let samples = panel
        .series
        .iter()
        .flat_map(|s| series_windows(s, l_enc, l_pred, stride))
        .collect();
    Ok(WindowSet {
        l_enc,
        l_pred,
        samples,
    })
}

/// Per-country window counts, handy for reporting.
pub fn window_counts(set: &WindowSet) -> BTreeMap<usize, usize> {
    let mut out = BTreeMap::new();
    for s in &set.samples {
        *out.entry(s.country_id).or_insert(0) += 1;
    }
    out
}
