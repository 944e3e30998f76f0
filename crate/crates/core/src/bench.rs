//! Runtime of the filter as a function of signal length.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::filter::NtewtFilter;
use crate::ntewt::{analyze, NtewtConfig};
use crate::signal::white_noise;
use crate::spectral::WaveletParams;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub n: usize,
    /// Mean wall-clock time of one filter run, seconds.
    pub mean_runtime_s: f64,
    /// `n / mean_runtime_s`: the highest sample rate at which a block of
    /// `n` samples is filtered before the next one has arrived.
    pub max_realtime_fs_hz: f64,
    pub repetitions: usize,
    /// Mean time of the transform alone (W, fixed points and NTe, no
    /// synthesis), when requested.
    pub transform_runtime_s: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub repetitions: usize,
    /// Untimed runs before each length.
    pub warmup: usize,
    pub seed: u64,
    /// Use the global rayon pool instead of a single thread.
    pub parallel: bool,
    pub time_transform: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { repetitions: 50, warmup: 3, seed: 0, parallel: false, time_transform: false }
    }
}

/// `4, 6, 8, …, max_n`.
pub fn even_lengths(min_n: usize, max_n: usize, step: usize) -> Vec<usize> {
    let start = min_n.max(4) + min_n % 2;
    (start..=max_n).step_by(step.max(2)).collect()
}

fn check_lengths(lengths: &[usize]) -> Result<Vec<usize>> {
    if let Some(&bad) = lengths.iter().find(|&&n| n < 4 || n % 2 != 0) {
        return Err(Error::param(format!("sweep length {bad} is not even and >= 4")));
    }
    let mut sorted = lengths.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    Ok(sorted)
}

/// Runs `f` on a pool of one thread unless `parallel` is set.
pub fn with_threads<T: Send>(parallel: bool, f: impl FnOnce() -> T + Send) -> Result<T> {
    if parallel {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| Error::Usage(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Times the filter on fresh random signals for each length.
///
/// Repetition `r` of length `n` analyses white noise seeded with
/// `seed + r`, so reruns see the same inputs.
pub fn run_speed_sweep(
    lengths: &[usize],
    params: &WaveletParams,
    cfg: &NtewtConfig,
    opts: &SweepOptions,
) -> Result<Vec<BenchRecord>> {
    if opts.repetitions == 0 {
        return Err(Error::param("repetitions must be >= 1"));
    }
    params.validate()?;
    cfg.validate()?;
    let lengths = check_lengths(lengths)?;
    let filter = NtewtFilter::new(*params, *cfg);
    let fs = 1.0;

    with_threads(opts.parallel, || {
        let mut records = Vec::with_capacity(lengths.len());
        for &n in &lengths {
            for w in 0..opts.warmup {
                let x = white_noise(n, fs, opts.seed.wrapping_add(w as u64))?;
                filter.run(&x)?;
            }
            let mut total = 0.0;
            let mut transform_total = 0.0;
            for r in 0..opts.repetitions {
                let x = white_noise(n, fs, opts.seed.wrapping_add(r as u64))?;
                let start = Instant::now();
                let out = filter.run(&x)?;
                total += start.elapsed().as_secs_f64();
                std::hint::black_box(out);
                if opts.time_transform {
                    let start = Instant::now();
                    let out = analyze(&x, params, cfg)?;
                    transform_total += start.elapsed().as_secs_f64();
                    std::hint::black_box(out);
                }
            }
            let reps = opts.repetitions as f64;
            let mean = (total / reps).max(f64::MIN_POSITIVE);
            records.push(BenchRecord {
                n,
                mean_runtime_s: mean,
                max_realtime_fs_hz: n as f64 / mean,
                repetitions: opts.repetitions,
                transform_runtime_s: opts.time_transform.then_some(transform_total / reps),
            });
        }
        Ok(records)
    })?
}

/// Least-squares slope of `ln(runtime)` against `ln(n)` over records with
/// `n` in `[n_min, n_max]`.
pub fn loglog_slope(records: &[BenchRecord], n_min: usize, n_max: usize) -> Option<f64> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| (n_min..=n_max).contains(&r.n))
        .map(|r| ((r.n as f64).ln(), r.mean_runtime_s.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Number of adjacent pairs where the runtime decreases as `n` grows.
pub fn monotonicity_inversions(records: &[BenchRecord]) -> usize {
    records.windows(2).filter(|w| w[1].mean_runtime_s < w[0].mean_runtime_s).count()
}

/// Linear interpolation of the mean runtime at `n`.
pub fn runtime_at(records: &[BenchRecord], n: usize) -> Option<f64> {
    if let Some(r) = records.iter().find(|r| r.n == n) {
        return Some(r.mean_runtime_s);
    }
    let lo = records.iter().filter(|r| r.n < n).max_by_key(|r| r.n)?;
    let hi = records.iter().filter(|r| r.n > n).min_by_key(|r| r.n)?;
    let t = (n - lo.n) as f64 / (hi.n - lo.n) as f64;
    Some(lo.mean_runtime_s + t * (hi.mean_runtime_s - lo.mean_runtime_s))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(n: usize, t: f64) -> BenchRecord {
        BenchRecord {
            n,
            mean_runtime_s: t,
            max_realtime_fs_hz: n as f64 / t,
            repetitions: 1,
            transform_runtime_s: None,
        }
    }

    #[test]
    fn slope_of_exact_power_law() {
        let recs: Vec<_> = [128usize, 256, 512, 1024].iter().map(|&n| record(n, 1e-9 * (n as f64).powi(2))).collect();
        let s = loglog_slope(&recs, 128, 1024).unwrap();
        assert!((s - 2.0).abs() < 1e-12);
        assert_eq!(monotonicity_inversions(&recs), 0);
        assert!(
            (runtime_at(&recs, 384).unwrap() - 0.5 * (recs[1].mean_runtime_s + recs[2].mean_runtime_s)).abs() < 1e-15
        );
    }

    #[test]
    fn rejects_bad_lengths() {
        let p = WaveletParams::new(3.0, 6.0);
        let c = NtewtConfig::default();
        let o = SweepOptions { repetitions: 1, warmup: 0, ..SweepOptions::default() };
        assert!(run_speed_sweep(&[6, 7], &p, &c, &o).is_err());
        assert!(run_speed_sweep(&[2], &p, &c, &o).is_err());
        let zero = SweepOptions { repetitions: 0, ..o };
        assert!(run_speed_sweep(&[8], &p, &c, &zero).is_err());
    }

    #[test]
    fn small_sweep_is_ordered_and_consistent() {
        let p = WaveletParams::new(3.0, 6.0);
        let c = NtewtConfig::with_epsilon(1e-2);
        let o = SweepOptions { repetitions: 2, warmup: 1, time_transform: true, ..SweepOptions::default() };
        let recs = run_speed_sweep(&[16, 8, 32], &p, &c, &o).unwrap();
        assert_eq!(recs.iter().map(|r| r.n).collect::<Vec<_>>(), vec![8, 16, 32]);
        for r in &recs {
            assert!(r.mean_runtime_s > 0.0);
            assert!((r.max_realtime_fs_hz - r.n as f64 / r.mean_runtime_s).abs() <= 1e-9 * r.max_realtime_fs_hz);
            assert!(r.transform_runtime_s.is_some());
        }
    }

    #[test]
    fn even_length_grid() {
        assert_eq!(even_lengths(4, 12, 2), vec![4, 6, 8, 10, 12]);
        assert_eq!(even_lengths(2, 8, 4), vec![4, 8]);
    }
}
