//! A1GM vs KL-WNMF comparison harness and report serialization.

use std::io;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::baselines::{cost_ratio, wnmf_rank1, IterativeConfig, IterativeResult};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::grid::{a1gm_factors, A1gmFactors};
use crate::matrix::masked_kl_outer;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub dataset: String,
    pub shape: (usize, usize),
    pub n_missing: usize,
    pub increase_rate: f64,
    pub relative_error: f64,
    pub runtime_a1gm: f64,
    pub runtime_wnmf: f64,
    pub relative_runtime: f64,
    pub seeds: Vec<u64>,
    pub trials: usize,
}

/// Seeds `base, base+1, …` used for the WNMF initializations of each trial.
pub fn trial_seeds(base: u64, trials: usize) -> Vec<u64> {
    (0..trials as u64).map(|k| base.wrapping_add(k)).collect()
}

/// Times A1GM and rank-1 KL-WNMF on `ds` over `trials` repetitions.
///
/// Each solver gets one untimed warm-up run. Runtimes are medians in seconds
/// from a monotonic clock; WNMF uses seed `cfg.seed + k` on trial `k`. The
/// relative error is `D_Φ(T, A1GM) / D_Φ(T, WNMF)` on the dataset's own mask,
/// taking the median over trials.
pub fn run_compare(ds: &Dataset, cfg: &IterativeConfig, trials: usize) -> Result<BenchReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    let ctx = |e: Error| e.context(format!("dataset {}", ds.name));
    cfg.validate().map_err(ctx)?;
    let seeds = trial_seeds(cfg.seed, trials);

    a1gm_factors(&ds.phi, &ds.t).map_err(ctx)?;
    wnmf_rank1(&ds.phi, &ds.t, cfg).map_err(ctx)?;

    let mut a1gm_times = Vec::with_capacity(trials);
    let mut wnmf_times = Vec::with_capacity(trials);
    let mut ratios = Vec::with_capacity(trials);
    let mut a1gm_out: Option<A1gmFactors> = None;
    for &seed in &seeds {
        let (factors, dt) = timed(|| a1gm_factors(&ds.phi, &ds.t));
        let factors = factors.map_err(ctx)?;
        a1gm_times.push(dt);

        let trial_cfg = IterativeConfig {
            seed,
            ..cfg.clone()
        };
        let (wnmf, dt) = timed(|| wnmf_rank1(&ds.phi, &ds.t, &trial_cfg));
        let wnmf: IterativeResult = wnmf.map_err(ctx)?;
        wnmf_times.push(dt);
        log::info!(
            "{}: seed {seed}: wnmf {} iterations (converged: {})",
            ds.name,
            wnmf.iterations,
            wnmf.converged
        );

        let ours = masked_kl_outer(&ds.phi, &ds.t, &factors.c, &factors.d).map_err(ctx)?;
        let theirs =
            masked_kl_outer(&ds.phi, &ds.t, &wnmf.factors.w, &wnmf.factors.h).map_err(ctx)?;
        ratios.push(cost_ratio(ours, theirs));
        a1gm_out = Some(factors);
    }
    let factors = a1gm_out.expect("trials >= 1");

    let runtime_a1gm = median_secs(&a1gm_times);
    let runtime_wnmf = median_secs(&wnmf_times);
    Ok(BenchReport {
        dataset: ds.name.clone(),
        shape: ds.t.shape(),
        n_missing: factors.original_missing,
        increase_rate: factors.increase_rate,
        relative_error: median(&mut ratios),
        runtime_a1gm,
        runtime_wnmf,
        relative_runtime: runtime_a1gm / runtime_wnmf,
        seeds,
        trials,
    })
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn median_secs(times: &[Duration]) -> f64 {
    let mut secs: Vec<f64> = times.iter().map(Duration::as_secs_f64).collect();
    median(&mut secs)
}

pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty());
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

/// JSON formatter printing every float with 17 significant digits
/// (`d.dddddddddddddddde±x`); non-finite values become `null`.
#[derive(Debug, Default, Clone, Copy)]
pub struct SigDigitsFormatter;

impl serde_json::ser::Formatter for SigDigitsFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Serializes any value as a single-line JSON object using [`SigDigitsFormatter`].
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigDigitsFormatter);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::InvalidArgument(format!("serialization failed: {e}")))?;
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn report_from_json(text: &str) -> Result<BenchReport> {
    serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("bad report: {e}")))
}
