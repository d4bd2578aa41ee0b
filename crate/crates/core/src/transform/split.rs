use log::warn;
use serde::{Deserialize, Serialize};

use super::windows::{
    check_window_dims, encoder_features, series_windows, StandardizedPanel, WindowSet, MAX_LAG,
};
use crate::error::Result;
use crate::numerics::Matrix;

pub const DEFAULT_CUTOFF: i32 = 2009;
pub const DEFAULT_VALIDATION_YEARS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    /// Exclusive upper bound on every year a training or validation window may touch.
    pub train_cutoff_year: i32,
    /// Number of final origin years of the training partition held out for validation.
    pub validation_years: usize,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_cutoff_year: DEFAULT_CUTOFF,
            validation_years: DEFAULT_VALIDATION_YEARS,
        }
    }
}

/// Encoder input for an out-of-sample forecast launched at `origin_year`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastOrigin {
    pub country_id: usize,
    pub origin_year: i32,
    pub encoder_input: Matrix,
}

#[derive(Debug, Clone)]
pub struct TemporalSplit {
    pub train: WindowSet,
    pub validation: WindowSet,
    pub test: Vec<ForecastOrigin>,
}

/// Encoder window ending at `origin_year` using only data up to that year.
pub fn origin_window(
    series: &super::windows::StandardizedSeries,
    origin_year: i32,
    l_enc: usize,
) -> Option<ForecastOrigin> {
    let t = origin_year - series.first_year;
    if t < (l_enc + MAX_LAG - 1) as i32 || t as usize >= series.z.len() {
        return None;
    }
    Some(ForecastOrigin {
        country_id: series.country_id,
        origin_year,
        encoder_input: encoder_features(&series.z, t as usize, l_enc),
    })
}

/// Chronological split. Training and validation windows read only years
/// `< cutoff`; validation holds the windows whose origin lies in the last
/// `validation_years` eligible origin years; the test set is one origin per
/// country at `cutoff − 1`, for countries observed past the cutoff.
pub fn temporal_split(
    panel: &StandardizedPanel,
    l_enc: usize,
    l_pred: usize,
    spec: SplitSpec,
) -> Result<TemporalSplit> {
    check_window_dims(l_enc, l_pred)?;
    let cutoff = spec.train_cutoff_year;
    let mut all = Vec::new();
    for s in &panel.series {
        all.extend(series_windows(&s.truncated_before(cutoff), l_enc, l_pred, 1));
    }

    let mut train = WindowSet::empty(l_enc, l_pred);
    let mut validation = WindowSet::empty(l_enc, l_pred);
    if spec.validation_years == 0 {
        warn!("validation_years = 0: validation set is empty");
        train.samples = all;
    } else {
        let max_origin = all.iter().map(|w| w.origin_year).max().unwrap_or(i32::MIN);
        let first_val = max_origin - spec.validation_years as i32 + 1;
        for w in all {
            if w.origin_year >= first_val {
                validation.samples.push(w);
            } else {
                train.samples.push(w);
            }
        }
    }

    let test = panel
        .series
        .iter()
        .filter(|s| s.last_year() >= cutoff)
        .filter_map(|s| origin_window(s, cutoff - 1, l_enc))
        .collect();

    Ok(TemporalSplit {
        train,
        validation,
        test,
    })
}

/// Full-sample split for forward projections: every window is available,
/// the last `validation_years` origins are still held out for early stopping.
pub fn full_sample_split(
    panel: &StandardizedPanel,
    l_enc: usize,
    l_pred: usize,
    validation_years: usize,
) -> Result<TemporalSplit> {
    temporal_split(
        panel,
        l_enc,
        l_pred,
        SplitSpec {
            train_cutoff_year: i32::MAX,
            validation_years,
        },
    )
    .map(|mut s| {
        s.test.clear();
        s
    })
}
