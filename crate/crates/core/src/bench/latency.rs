use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_REPS: usize = 5;

/// Wall-clock statistics over repeated runs, in milliseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub p50_ms: f64,
    pub mean_ms: f64,
    pub std_ms: f64,
    pub min_ms: f64,
    pub max_ms: f64,
    pub reps: usize,
    /// Share of the total spent in weighting and fusion. Only set when the
    /// components were timed in the same session.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overhead_fraction: Option<f64>,
}

impl LatencyStats {
    fn from_samples(samples: &[f64]) -> Self {
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let p50_ms = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
        };
        let mean_ms = sorted.iter().sum::<f64>() / n as f64;
        let var = sorted.iter().map(|s| (s - mean_ms).powi(2)).sum::<f64>() / (n.max(2) - 1) as f64;
        Self {
            p50_ms,
            mean_ms,
            std_ms: var.sqrt(),
            min_ms: sorted[0],
            max_ms: sorted[n - 1],
            reps: n,
            overhead_fraction: None,
        }
    }
}

/// Per-stage and total statistics of a two-stage ensemble run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverheadBreakdown {
    pub total: LatencyStats,
    pub members: LatencyStats,
    pub fusion: LatencyStats,
}

fn check_reps(reps: usize) -> Result<()> {
    if reps < MIN_REPS {
        return Err(Error::InvalidConfig(format!("need at least {MIN_REPS} reps, got {reps}")));
    }
    Ok(())
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Runs `f` on a dedicated single-thread pool so nested parallel code in
/// the measured closures does not fan out.
fn pinned<R: Send>(f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Times `work` `reps` times after `warmup` discarded runs.
pub fn measure_latency<F: FnMut() + Send>(mut work: F, warmup: usize, reps: usize) -> Result<LatencyStats> {
    check_reps(reps)?;
    pinned(move || {
        for _ in 0..warmup {
            work();
        }
        let samples: Vec<f64> = (0..reps)
            .map(|_| {
                let start = Instant::now();
                work();
                elapsed_ms(start)
            })
            .collect();
        LatencyStats::from_samples(&samples)
    })
}

/// Times the member forward passes and the weighting/fusion step back to
/// back in every repetition. `overhead_fraction` on the total is
/// Σ fusion time / Σ total time.
pub fn measure_with_overhead<M, F>(mut members: M, mut fusion: F, warmup: usize, reps: usize) -> Result<OverheadBreakdown>
where
    M: FnMut() + Send,
    F: FnMut() + Send,
{
    check_reps(reps)?;
    pinned(move || {
        for _ in 0..warmup {
            members();
            fusion();
        }
        let mut member_ms = Vec::with_capacity(reps);
        let mut fusion_ms = Vec::with_capacity(reps);
        for _ in 0..reps {
            let start = Instant::now();
            members();
            member_ms.push(elapsed_ms(start));
            let start = Instant::now();
            fusion();
            fusion_ms.push(elapsed_ms(start));
        }
        let total_ms: Vec<f64> = member_ms.iter().zip(&fusion_ms).map(|(m, f)| m + f).collect();
        let grand: f64 = total_ms.iter().sum();
        let mut total = LatencyStats::from_samples(&total_ms);
        total.overhead_fraction = Some(if grand > 0.0 {
            (fusion_ms.iter().sum::<f64>() / grand).min(1.0 - f64::EPSILON)
        } else {
            0.0
        });
        OverheadBreakdown {
            total,
            members: LatencyStats::from_samples(&member_ms),
            fusion: LatencyStats::from_samples(&fusion_ms),
        }
    })
}
