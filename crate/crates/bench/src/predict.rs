//! Roofline predictions attached to benchmark results.

use std::path::Path;

use ulb_core::{modeled_aggregate_bw, KernelProfile, PlatformSpec, RooflineError};

use crate::runner::{BenchError, BenchResult};
use crate::suite::ShapeSuite;

/// Modeled aggregate GB/s for a bit width on a platform. The model is
/// shape-independent; int8 has no profile and yields `UnknownProfile`.
pub fn predicted_gbs(bits: u8, platform: &PlatformSpec) -> Result<f64, RooflineError> {
    Ok(modeled_aggregate_bw(platform, &KernelProfile::for_bits(bits)?)?.aggregate_gbs)
}

/// `((m, k), predicted GB/s)` per shape.
pub type ShapePredictions = Vec<((usize, usize), f64)>;

/// Prediction for every shape of `suite`.
pub fn predict(
    suite: &ShapeSuite,
    bits: u8,
    platform: &PlatformSpec,
) -> Result<ShapePredictions, BenchError> {
    suite.validate()?;
    let gbs = predicted_gbs(bits, platform)?;
    Ok(suite.shapes.iter().map(|s| ((s.m, s.k), gbs)).collect())
}

/// Fills `predicted_gbs` on results whose bit width has a profile; others
/// are left empty.
pub fn attach_predictions(results: &mut [BenchResult], platform: &PlatformSpec) -> Result<(), RooflineError> {
    for r in results {
        r.predicted_gbs = match predicted_gbs(r.bits, platform) {
            Ok(g) => Some(g),
            Err(RooflineError::UnknownProfile(_)) => None,
            Err(e) => return Err(e),
        };
    }
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &str) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// A built-in platform name or a JSON `PlatformSpec` file.
pub fn load_platform(name_or_path: &str) -> anyhow::Result<PlatformSpec> {
    let platform = match PlatformSpec::builtin(name_or_path) {
        Err(RooflineError::UnknownPlatform(_)) if Path::new(name_or_path).is_file() => read_json(name_or_path)?,
        r => r?,
    };
    platform.validate()?;
    Ok(platform)
}

/// A built-in profile name (`int1`, `int2`) or a JSON `KernelProfile` file.
pub fn load_profile(name_or_path: &str) -> anyhow::Result<KernelProfile> {
    let profile = match KernelProfile::builtin(name_or_path) {
        Err(RooflineError::UnknownProfile(_)) if Path::new(name_or_path).is_file() => read_json(name_or_path)?,
        r => r?,
    };
    profile.validate()?;
    Ok(profile)
}
