//! GEMV bandwidth benchmark harness.
//!
//! Builds random packed weights for model-derived shapes, times the serial
//! and parallel kernels from `ulb-core`, reports attained weight bandwidth and
//! compares it with the analytical roofline model.

pub mod calibrate;
pub mod predict;
pub mod report;
pub mod runner;
pub mod suite;

pub use calibrate::{calibrate_gamma, GammaEstimate};
pub use predict::{attach_predictions, load_platform, load_profile, predict, predicted_gbs};
pub use report::{read_csv, read_json, report, write_csv, write_json, BenchReport, ReportFormat};
pub use runner::{run_gemv_bench, BenchConfig, BenchError, BenchResult, WeightInit};
pub use suite::{Shape, ShapeSuite, SuiteError};
