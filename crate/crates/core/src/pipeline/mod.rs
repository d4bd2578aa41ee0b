//! End-to-end stages shared by the command-line tool and the examples:
//! synthetic panels, run manifests and the ingest → train → evaluate →
//! forecast → report chain.

mod benchmark;
mod manifest;
mod stages;
mod synth;

pub use benchmark::{benchmark_configs, run_benchmark, BenchmarkResult};
pub use manifest::{file_sha256, sha256_hex, OutputEntry, RunManifest, ARTIFACT_VERSION, MANIFEST_FILE, SCHEMA_VERSION};
pub use stages::*;
pub use synth::{country_code, synth_panel, transition, SynthConfig, Transition};
