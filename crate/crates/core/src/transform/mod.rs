//! Log standardization with one global scaler, sliding windows with lag
//! features, low-fertility augmentation and leakage-free temporal splits.

mod augment;
mod cache;
mod scaler;
mod split;
mod windows;

pub use augment::{augment_low_fertility, low_fertility_countries, AugmentConfig};
pub use cache::{cache_key, read_cache, write_cache, CacheKey, CACHE_VERSION};
pub use scaler::{fit_scaler, GlobalScaler};
pub use split::{
    full_sample_split, origin_window, temporal_split, ForecastOrigin, SplitSpec, TemporalSplit,
    DEFAULT_CUTOFF, DEFAULT_VALIDATION_YEARS,
};
pub use windows::{
    encoder_features, expected_window_count, log_standardize, make_windows, observed_lag,
    series_windows, window_counts, CountryIndex, StandardizedPanel, StandardizedSeries,
    WindowSample, WindowSet, LAGS, MAX_LAG, N_FEATURES,
};
