use serde::{Deserialize, Serialize};

pub const QUANTILE_COUNT: usize = 5;
pub const QUANTILE_LEVELS: [f64; QUANTILE_COUNT] = [0.05, 0.10, 0.50, 0.90, 0.95];
/// Column of the τ = 0.50 output.
pub const MEDIAN_INDEX: usize = 2;

pub type QuantileRow = [f64; QUANTILE_COUNT];

/// `l_pred × 5` quantile predictions, one row per forecast step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastGrid {
    pub rows: Vec<QuantileRow>,
}

impl ForecastGrid {
    pub fn new(rows: Vec<QuantileRow>) -> Self {
        ForecastGrid { rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn median(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r[MEDIAN_INDEX]).collect()
    }

    pub fn column(&self, q: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[q]).collect()
    }

    pub fn is_monotone(&self) -> bool {
        self.rows.iter().all(|r| r.windows(2).all(|w| w[0] <= w[1]))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ForecastGrid {
        ForecastGrid {
            rows: self.rows.iter().map(|r| r.map(&f)).collect(),
        }
    }
}

/// Sorts each row ascending so quantiles never cross.
pub fn rearrange_quantiles(grid: &ForecastGrid) -> ForecastGrid {
    ForecastGrid {
        rows: grid
            .rows
            .iter()
            .map(|r| {
                let mut s = *r;
                s.sort_by(f64::total_cmp);
                s
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sorts_rows() {
        let g = ForecastGrid::new(vec![[3.0, 1.0, 2.0, 5.0, 4.0]]);
        assert_eq!(rearrange_quantiles(&g).rows[0], [1.0, 2.0, 3.0, 4.0, 5.0]);
        let m = ForecastGrid::new(vec![[0.1, 0.2, 0.2, 0.9, 1.0]]);
        assert_eq!(rearrange_quantiles(&m), m);
    }

    proptest! {
        #[test]
        fn rearranged_rows_are_sorted_permutations(
            rows in prop::collection::vec(prop::array::uniform5(-5.0f64..5.0), 1..20)
        ) {
            let g = ForecastGrid::new(rows.clone());
            let r = rearrange_quantiles(&g);
            prop_assert!(r.is_monotone());
            prop_assert_eq!(rearrange_quantiles(&r).clone(), r.clone());
            for (a, b) in rows.iter().zip(&r.rows) {
                let mut oracle = a.to_vec();
                oracle.sort_by(|x, y| x.partial_cmp(y).unwrap());
                prop_assert_eq!(oracle, b.to_vec());
            }
        }
    }
}
