//! Forward projections, comparator files and aggregate reports.

mod aggregate;
mod forward;
mod records;

pub use aggregate::{
    band_label, build_report, category, endpoint_value, regional_endpoint_table, threshold_shares,
    weighted_tfr, AggregateReport, RegionalRow, ShareEntry, WeightedEntry, AGGREGATE_HEADER,
    CATEGORY_LABELS, ENDPOINT_YEAR, REGIONAL_HEADER, REPORT_INTERVALS, THRESHOLDS,
};
pub use forward::{chained_forecast, forecast_forward};
pub use records::{
    group_by_model, load_comparators, read_forecasts, read_forecasts_reader, read_regions,
    read_weights, write_forecasts, ForecastRecord, FORECAST_HEADER,
};
