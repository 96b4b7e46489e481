use std::fs::File;
use std::io::{BufWriter, Read};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ulb_bench::{
    attach_predictions, calibrate_gamma, load_platform, load_profile, report, run_gemv_bench, BenchConfig,
    ReportFormat, ShapeSuite,
};
use ulb_core::{
    amdahl_speedup, default_block_k, modeled_aggregate_bw, pack_int1, pack_int2, write_packed, Codebook4,
    DenseCodeMatrix, KernelVariant, ParallelConfig,
};

#[derive(Parser)]
#[command(name = "ulb-bench", version, about = "Low-bit GEMV benchmark and roofline model")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Time GEMV over a shape suite and report attained bandwidth.
    Gemv(GemvArgs),
    /// Print the roofline model for a platform and kernel profile.
    Roofline {
        #[arg(long)]
        platform: String,
        #[arg(long)]
        profile: String,
        #[arg(long)]
        json: bool,
    },
    /// End-to-end speedup when a fraction ALPHA shrinks by X (X may be `inf`).
    Amdahl {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        x: f64,
    },
    /// Measure single-thread time per 32-weight vector on this host.
    CalibrateGamma {
        #[arg(long, value_parser = ["1", "2"], default_value = "2")]
        bits: String,
        #[arg(long, value_enum)]
        variant: Option<VariantArg>,
        /// Columns of the 32-row block; keep it cache-resident.
        #[arg(long, default_value_t = 2048)]
        k: usize,
        #[arg(long, default_value_t = 20)]
        reps: usize,
        /// Core frequency, to convert nanoseconds into cycles.
        #[arg(long)]
        freq_ghz: Option<f64>,
    },
    /// Pack a text codes file ("M K" then M*K codes, row-major) into a .ulbw file.
    Pack {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_parser = ["1", "2"])]
        bits: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        block_k: Option<usize>,
        /// 2-bit codebook as four comma-separated int8 values.
        #[arg(long, default_value = "-2,-1,0,1", allow_hyphen_values = true)]
        codebook: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Scalar,
    Simd,
}

impl From<VariantArg> for KernelVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Scalar => KernelVariant::Scalar,
            VariantArg::Simd => KernelVariant::Simd,
        }
    }
}

#[derive(Args)]
struct GemvArgs {
    #[arg(long, value_parser = ["1", "2", "8"])]
    bits: String,
    /// Built-in suite name or suite JSON file.
    #[arg(long, conflicts_with_all = ["m", "k"])]
    suite: Option<String>,
    #[arg(long, requires = "k")]
    m: Option<usize>,
    #[arg(long, requires = "m")]
    k: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, default_value_t = 1)]
    chunk_blocks: usize,
    #[arg(long, default_value_t = 100)]
    iters: usize,
    #[arg(long, default_value_t = 10)]
    warmup: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    #[arg(long, requires = "platform")]
    predict: bool,
    /// arl, arlh, lnl or a platform JSON file.
    #[arg(long)]
    platform: Option<String>,
    #[arg(long, value_enum, default_value = "csv")]
    format: ReportFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn variant(v: Option<VariantArg>) -> Result<KernelVariant> {
    let v = v.map_or(KernelVariant::best(), KernelVariant::from);
    if v == KernelVariant::Simd && !KernelVariant::simd_available() {
        bail!("the simd variant needs AVX2, which this host lacks");
    }
    Ok(v)
}

fn gemv(a: GemvArgs) -> Result<()> {
    let suite = match (&a.suite, a.m, a.k) {
        (Some(s), _, _) => ShapeSuite::load(s)?,
        (None, Some(m), Some(k)) => ShapeSuite::single(m, k)?,
        _ => bail!("give --suite or both --m and --k"),
    };
    let workers = a.threads.unwrap_or_else(|| ParallelConfig::default().worker_count);
    let cfg = BenchConfig {
        variant: variant(a.variant)?,
        iterations: a.iters,
        warmup: a.warmup,
        seed: a.seed,
        ..BenchConfig::new(a.bits.parse()?, ParallelConfig::new(workers, a.chunk_blocks)?)
    };
    let mut results = run_gemv_bench(&suite, &cfg)?;
    if a.predict {
        let platform = load_platform(a.platform.as_deref().expect("clap enforces --platform"))?;
        attach_predictions(&mut results, &platform)?;
    }
    report(&results, a.seed, a.format, a.out.as_deref())
}

fn read_codes(path: &PathBuf) -> Result<DenseCodeMatrix> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .with_context(|| format!("reading {}", path.display()))?;
    let mut tokens = text.split_whitespace();
    let mut dim = |what: &str| -> Result<usize> {
        tokens.next().with_context(|| format!("missing {what}"))?.parse().with_context(|| format!("bad {what}"))
    };
    let (m, k) = (dim("M")?, dim("K")?);
    let codes = tokens.map(|t| t.parse::<u8>().with_context(|| format!("bad code {t:?}"))).collect::<Result<Vec<_>>>()?;
    if codes.len() != m * k {
        bail!("expected {} codes for {m}x{k}, found {}", m * k, codes.len());
    }
    Ok(DenseCodeMatrix::new(m, k, codes)?)
}

fn parse_codebook(s: &str) -> Result<Codebook4> {
    let v = s.split(',').map(|x| x.trim().parse::<i8>()).collect::<Result<Vec<_>, _>>()?;
    let values: [i8; 4] = v.try_into().map_err(|_| anyhow::anyhow!("codebook needs exactly 4 values"))?;
    Ok(Codebook4::new(values))
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Gemv(a) => gemv(a)?,
        Cmd::Roofline { platform, profile, json } => {
            let r = modeled_aggregate_bw(&load_platform(&platform)?, &load_profile(&profile)?)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&r)?);
            } else {
                println!("{r}");
            }
        }
        Cmd::Amdahl { alpha, x } => println!("{:.4}", amdahl_speedup(alpha, x)?),
        Cmd::CalibrateGamma { bits, variant: v, k, reps, freq_ghz } => {
            if k == 0 || k % 4 != 0 {
                bail!("--k must be a positive multiple of 4");
            }
            let e = calibrate_gamma(bits.parse()?, variant(v)?, k, reps, freq_ghz);
            println!("{}", serde_json::to_string_pretty(&e)?);
        }
        Cmd::Pack { input, bits, out, block_k, codebook } => {
            let codes = read_codes(&input)?;
            let bk = match block_k {
                Some(b) => b,
                None => default_block_k(codes.cols()).context("K must be a multiple of 4")?,
            };
            let packed = match bits.as_str() {
                "2" => pack_int2(&codes, bk, parse_codebook(&codebook)?, None)?,
                _ => pack_int1(&codes, bk, None)?,
            };
            let f = File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            write_packed(&packed, BufWriter::new(f))?;
            eprintln!("packed {}x{} {}-bit, block_k {bk}, {} payload bytes", codes.rows(), codes.cols(), bits, packed.payload().len());
        }
    }
    Ok(())
}
