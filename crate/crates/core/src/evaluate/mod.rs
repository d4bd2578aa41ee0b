//! Point and probabilistic accuracy metrics, paired signed-rank tests and
//! cross-country summaries.

mod metrics;
mod report;
mod wilcoxon;

pub use metrics::{coverage, crps_mean, crps_q, mis, mpiw, rmse, rmsse, smape, ALPHA_90};
pub use report::{
    score_country, summarize, write_scores, write_summary, CountryScores, MetricReport,
    MetricSummary, PairedTest, METRICS, SCORES_HEADER, SUMMARY_HEADER,
};
pub use wilcoxon::{average_ranks, wilcoxon_signed_rank, EXACT_MAX_N};
