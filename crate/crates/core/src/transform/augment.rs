use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::windows::{CountryIndex, WindowSample, WindowSet};
use crate::ingest::HarmonizedPanel;
use crate::numerics::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    /// Countries whose training series reaches this TFR or lower qualify.
    pub threshold_tfr: f64,
    pub recent_windows: usize,
    /// Noise SD in standardized units.
    pub sigma_noise: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            threshold_tfr: 1.3,
            recent_windows: 10,
            sigma_noise: 0.01,
        }
    }
}

/// Country ids whose natural-scale series attains `≤ threshold` before `cutoff`.
pub fn low_fertility_countries(
    panel: &HarmonizedPanel,
    index: &CountryIndex,
    cutoff: Option<i32>,
    threshold: f64,
) -> BTreeSet<usize> {
    panel
        .series
        .iter()
        .filter(|(_, s)| {
            s.years()
                .zip(&s.values)
                .any(|(y, v)| cutoff.map_or(true, |c| y < c) && *v <= threshold)
        })
        .filter_map(|(code, _)| index.id(code))
        .collect()
}

/// Appends one noisy copy of each qualifying country's most recent training
/// windows. Original windows are left untouched; noise is drawn independently
/// for every encoder and target cell.
pub fn augment_low_fertility(
    train: &WindowSet,
    qualifying: &BTreeSet<usize>,
    config: AugmentConfig,
    rng: &RngStream,
) -> WindowSet {
    let mut out = train.clone();
    for &cid in qualifying {
        let mut idx: Vec<usize> = train
            .samples
            .iter()
            .enumerate()
            .filter(|(_, w)| w.country_id == cid && !w.augmented)
            .map(|(i, _)| i)
            .collect();
        idx.sort_by_key(|&i| std::cmp::Reverse(train.samples[i].origin_year));
        idx.truncate(config.recent_windows);
        idx.sort_by_key(|&i| train.samples[i].origin_year);
        let mut noise = rng.derive_indexed("augment", cid as u64);
        for i in idx {
            let src = &train.samples[i];
            let mut enc = src.encoder_input.clone();
            for v in enc.as_mut_slice() {
                *v += config.sigma_noise * noise.normal();
            }
            let target = src
                .target
                .iter()
                .map(|v| v + config.sigma_noise * noise.normal())
                .collect();
            out.samples.push(WindowSample {
                country_id: src.country_id,
                origin_year: src.origin_year,
                encoder_input: enc,
                target,
                augmented: true,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{AnnualSeries, CellFlag};
    use crate::numerics::Matrix;

    fn window(cid: usize, origin: i32) -> WindowSample {
        WindowSample {
            country_id: cid,
            origin_year: origin,
            encoder_input: Matrix::from_fn(7, 4, |r, c| (r * 4 + c) as f64),
            target: vec![1.0, 2.0],
            augmented: false,
        }
    }

    fn set(rows: &[(usize, i32)]) -> WindowSet {
        WindowSet {
            l_enc: 7,
            l_pred: 2,
            samples: rows.iter().map(|&(c, o)| window(c, o)).collect(),
        }
    }

    #[test]
    fn no_qualifying_country_is_a_no_op() {
        let s = set(&[(0, 1990), (1, 1991)]);
        let out = augment_low_fertility(&s, &BTreeSet::new(), AugmentConfig::default(), &RngStream::new(1));
        assert_eq!(out, s);
    }

    #[test]
    fn qualifying_country_with_four_windows() {
        let s = set(&[(0, 1990), (0, 1991), (0, 1992), (0, 1993), (1, 1990)]);
        let q: BTreeSet<usize> = [0].into_iter().collect();
        let out = augment_low_fertility(&s, &q, AugmentConfig::default(), &RngStream::new(1));
        assert_eq!(out.len(), 9);
        assert_eq!(out.augmented_count(), 4);
        // Originals are bitwise unchanged.
        assert_eq!(&out.samples[..5], &s.samples[..]);
        for a in out.samples.iter().filter(|w| w.augmented) {
            assert_eq!(a.country_id, 0);
            assert_ne!(a.encoder_input, s.samples[0].encoder_input);
        }
    }

    #[test]
    fn keeps_only_most_recent_ten() {
        let rows: Vec<(usize, i32)> = (0..15).map(|i| (2, 1970 + i)).collect();
        let s = set(&rows);
        let q: BTreeSet<usize> = [2].into_iter().collect();
        let out = augment_low_fertility(&s, &q, AugmentConfig::default(), &RngStream::new(4));
        let origins: Vec<i32> = out.samples.iter().filter(|w| w.augmented).map(|w| w.origin_year).collect();
        assert_eq!(origins, (1975..1985).collect::<Vec<_>>());
    }

    #[test]
    fn qualification_respects_cutoff() {
        let p = HarmonizedPanel::from_series([
            AnnualSeries {
                country_code: "A".into(),
                first_year: 2005,
                values: vec![1.6, 1.4, 1.2],
                flags: vec![CellFlag::Observed; 3],
                smoothed: false,
            },
            AnnualSeries {
                country_code: "B".into(),
                first_year: 2005,
                values: vec![1.3, 1.4, 1.5],
                flags: vec![CellFlag::Observed; 3],
                smoothed: false,
            },
        ])
        .unwrap();
        let idx = CountryIndex::from_panel(&p);
        let q = low_fertility_countries(&p, &idx, Some(2007), 1.3);
        assert_eq!(q.into_iter().collect::<Vec<_>>(), vec![1]);
        let q = low_fertility_countries(&p, &idx, None, 1.3);
        assert_eq!(q.len(), 2);
    }
}
