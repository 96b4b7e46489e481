//! Analytical performance models for bandwidth-bound GEMV.
//!
//! Per core, computing one 256-bit int8 weight vector needs `B` bytes from
//! memory and `γ` cycles of up-convert + multiply-accumulate work, while the
//! core can draw `β` bytes/cycle under full-machine load:
//!
//! ```text
//! cycles per vector   T     = max(B / β, γ)
//! effective bandwidth e_bw  = min(β, B / γ)
//! ```
//!
//! Hybrid platforms get one `γ` per core type. The aggregate model shares
//! the measured read bandwidth equally between all cores and caps each
//! core at its compute-limited rate.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RooflineError {
    #[error("{what} must be positive and finite, got {value}")]
    NonPositive { what: &'static str, value: f64 },
    #[error("platform {0:?} has no cores")]
    NoCores(String),
    #[error("alpha must lie in [0, 1], got {0}")]
    AlphaOutOfRange(f64),
    #[error("shrink factor x must be at least 1, got {0}")]
    ShrinkBelowOne(f64),
    #[error("unknown platform {0:?} (built-ins: arl, arlh, lnl)")]
    UnknownPlatform(String),
    #[error("unknown kernel profile {0:?} (built-ins: int1, int2)")]
    UnknownProfile(String),
}

fn positive(what: &'static str, value: f64) -> Result<f64, RooflineError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(RooflineError::NonPositive { what, value })
    }
}

/// A CPU platform: core counts, loaded frequencies and measured read bandwidth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatformSpec {
    pub name: String,
    pub p_cores: u32,
    pub e_cores: u32,
    pub p_freq_ghz: f64,
    pub e_freq_ghz: f64,
    /// Measured platform read bandwidth, GB/s.
    pub read_bw_gbs: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_power_w: Option<f64>,
}

impl PlatformSpec {
    /// Core Ultra 9 285K: 8P + 16E, DDR5-7200.
    pub fn arl() -> Self {
        Self::builtin_entry("arl", 8, 16, 5.4, 4.5, 98.0, 250.0)
    }

    /// Core Ultra 7 255H: 6P + 8E, DDR5-5600.
    pub fn arlh() -> Self {
        Self::builtin_entry("arlh", 6, 8, 4.0, 3.6, 75.0, 115.0)
    }

    /// Core Ultra 7 258V: 4P + 4E, DDR5-8533.
    pub fn lnl() -> Self {
        Self::builtin_entry("lnl", 4, 4, 4.1, 3.7, 97.0, 37.0)
    }

    fn builtin_entry(name: &str, p: u32, e: u32, pf: f64, ef: f64, bw: f64, w: f64) -> Self {
        Self {
            name: name.to_owned(),
            p_cores: p,
            e_cores: e,
            p_freq_ghz: pf,
            e_freq_ghz: ef,
            read_bw_gbs: bw,
            max_power_w: Some(w),
        }
    }

    pub fn builtins() -> Vec<Self> {
        vec![Self::arl(), Self::arlh(), Self::lnl()]
    }

    pub fn builtin(name: &str) -> Result<Self, RooflineError> {
        Self::builtins()
            .into_iter()
            .find(|p| p.name.eq_ignore_ascii_case(name))
            .ok_or_else(|| RooflineError::UnknownPlatform(name.to_owned()))
    }

    pub fn total_cores(&self) -> u32 {
        self.p_cores + self.e_cores
    }

    pub fn validate(&self) -> Result<(), RooflineError> {
        if self.total_cores() == 0 {
            return Err(RooflineError::NoCores(self.name.clone()));
        }
        positive("p_freq_ghz", self.p_freq_ghz)?;
        positive("e_freq_ghz", self.e_freq_ghz)?;
        positive("read_bw_gbs", self.read_bw_gbs)?;
        Ok(())
    }

    /// Equal share of the read bandwidth per core, GB/s.
    pub fn per_core_share_gbs(&self) -> Result<f64, RooflineError> {
        self.validate()?;
        Ok(self.read_bw_gbs / self.total_cores() as f64)
    }
}

/// Cost of the up-convert-and-compute sequence for one kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelProfile {
    pub name: String,
    /// Bytes read per 256-bit int8 weight vector.
    pub bytes_per_vector_b: f64,
    /// Cycles per vector on a performance core.
    pub gamma_p: f64,
    /// Cycles per vector on an efficiency core.
    pub gamma_e: f64,
}

impl KernelProfile {
    /// 2-bit interleaved kernel: 8 bytes per vector.
    pub fn int2() -> Self {
        Self { name: "int2".into(), bytes_per_vector_b: 8.0, gamma_p: 1.25, gamma_e: 2.175 }
    }

    /// 1-bit VNNI4 kernel: 4 bytes per vector.
    pub fn int1() -> Self {
        Self { name: "int1".into(), bytes_per_vector_b: 4.0, gamma_p: 2.4, gamma_e: 4.71 }
    }

    pub fn builtin(name: &str) -> Result<Self, RooflineError> {
        match name.to_ascii_lowercase().as_str() {
            "int2" | "2" => Ok(Self::int2()),
            "int1" | "1" => Ok(Self::int1()),
            _ => Err(RooflineError::UnknownProfile(name.to_owned())),
        }
    }

    /// Built-in profile for a weight bit width.
    pub fn for_bits(bits: u8) -> Result<Self, RooflineError> {
        match bits {
            2 => Ok(Self::int2()),
            1 => Ok(Self::int1()),
            other => Err(RooflineError::UnknownProfile(format!("int{other}"))),
        }
    }

    pub fn validate(&self) -> Result<(), RooflineError> {
        positive("bytes_per_vector_b", self.bytes_per_vector_b)?;
        positive("gamma_p", self.gamma_p)?;
        positive("gamma_e", self.gamma_e)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    BandwidthBound,
    ComputeBound,
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Bound::BandwidthBound => "bandwidth_bound",
            Bound::ComputeBound => "compute_bound",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RooflineReport {
    pub platform: String,
    pub profile: String,
    /// Bytes/cycle available per core.
    pub beta_p: f64,
    pub beta_e: f64,
    /// Effective bytes/cycle per core.
    pub ebw_p: f64,
    pub ebw_e: f64,
    pub per_core_gbs_p: f64,
    pub per_core_gbs_e: f64,
    pub aggregate_gbs: f64,
    pub bound_p: Bound,
    pub bound_e: Bound,
}

impl fmt::Display for RooflineReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "platform {} / profile {}", self.platform, self.profile)?;
        writeln!(
            f,
            "  P core: beta {:.3} B/cyc, e_bw {:.3} B/cyc, {:.3} GB/s ({})",
            self.beta_p, self.ebw_p, self.per_core_gbs_p, self.bound_p
        )?;
        writeln!(
            f,
            "  E core: beta {:.3} B/cyc, e_bw {:.3} B/cyc, {:.3} GB/s ({})",
            self.beta_e, self.ebw_e, self.per_core_gbs_e, self.bound_e
        )?;
        write!(f, "  aggregate: {:.2} GB/s", self.aggregate_gbs)
    }
}

/// `max(B / β, γ)`: cycles to produce one output vector.
pub fn cycles_per_vector(bytes: f64, beta: f64, gamma: f64) -> Result<f64, RooflineError> {
    let (b, beta, gamma) = (positive("B", bytes)?, positive("beta", beta)?, positive("gamma", gamma)?);
    Ok((b / beta).max(gamma))
}

/// `min(β, B / γ)`: bytes/cycle a core can actually consume.
pub fn effective_bw(beta: f64, bytes: f64, gamma: f64) -> Result<f64, RooflineError> {
    let (beta, b, gamma) = (positive("beta", beta)?, positive("B", bytes)?, positive("gamma", gamma)?);
    Ok(beta.min(b / gamma))
}

/// Per-core bytes/cycle `(β_P, β_E)` under an equal split of the read bandwidth.
pub fn platform_betas(platform: &PlatformSpec) -> Result<(f64, f64), RooflineError> {
    let share = platform.per_core_share_gbs()?;
    Ok((share / platform.p_freq_ghz, share / platform.e_freq_ghz))
}

/// Aggregate modeled bandwidth: every core gets
/// `min(share, B / γ × f)` GB/s, summed over P and E cores.
pub fn modeled_aggregate_bw(platform: &PlatformSpec, profile: &KernelProfile) -> Result<RooflineReport, RooflineError> {
    profile.validate()?;
    let share = platform.per_core_share_gbs()?;
    let (beta_p, beta_e) = platform_betas(platform)?;
    let b = profile.bytes_per_vector_b;

    let side = |beta: f64, gamma: f64, freq: f64| {
        let compute_limit = b / gamma;
        let ebw = beta.min(compute_limit);
        let bound = if beta <= compute_limit { Bound::BandwidthBound } else { Bound::ComputeBound };
        (ebw, ebw * freq, bound)
    };
    let (ebw_p, gbs_p, bound_p) = side(beta_p, profile.gamma_p, platform.p_freq_ghz);
    let (ebw_e, gbs_e, bound_e) = side(beta_e, profile.gamma_e, platform.e_freq_ghz);

    // Bandwidth-bound cores together draw exactly their share of the total.
    let mut bw_bound_cores = 0;
    let mut compute_gbs = 0.0;
    for (count, bound, gbs) in [(platform.p_cores, bound_p, gbs_p), (platform.e_cores, bound_e, gbs_e)] {
        match bound {
            Bound::BandwidthBound => bw_bound_cores += count,
            Bound::ComputeBound => compute_gbs += count as f64 * gbs,
        }
    }
    let aggregate_gbs = platform.read_bw_gbs * bw_bound_cores as f64 / platform.total_cores() as f64 + compute_gbs;

    Ok(RooflineReport {
        platform: platform.name.clone(),
        profile: profile.name.clone(),
        beta_p,
        beta_e,
        ebw_p,
        ebw_e,
        per_core_gbs_p: if bound_p == Bound::BandwidthBound { share } else { gbs_p },
        per_core_gbs_e: if bound_e == Bound::BandwidthBound { share } else { gbs_e },
        aggregate_gbs,
        bound_p,
        bound_e,
    })
}

/// End-to-end speedup when a fraction `alpha` of the runtime shrinks by `x`:
/// `1 / (1 - α + α / x)`. `x` may be infinite.
pub fn amdahl_speedup(alpha: f64, x: f64) -> Result<f64, RooflineError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(RooflineError::AlphaOutOfRange(alpha));
    }
    if x.is_nan() || x < 1.0 {
        return Err(RooflineError::ShrinkBelowOne(x));
    }
    Ok(1.0 / (1.0 - alpha + alpha / x))
}

/// Weight bytes streamed by one `m × k` GEMV at `bits` per weight.
pub fn weight_payload_bytes(m: usize, k: usize, bits: u8) -> u64 {
    m as u64 * k as u64 * bits as u64 / 8
}

/// Time to stream `bytes` at `bandwidth_gbs` (10^9 bytes/s).
pub fn ideal_seconds(bytes: u64, bandwidth_gbs: f64) -> Result<f64, RooflineError> {
    Ok(bytes as f64 / (positive("bandwidth_gbs", bandwidth_gbs)? * 1e9))
}

/// Attained bandwidth in GB/s for `bytes` moved in `seconds`.
pub fn attained_gbs(bytes: u64, seconds: f64) -> Result<f64, RooflineError> {
    Ok(bytes as f64 / positive("seconds", seconds)? / 1e9)
}
