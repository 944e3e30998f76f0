//! Single-pass NTEWT filter.
//!
//! Each scale row is analysed, thresholded and renormalised, and the
//! surviving coefficients are immediately synthesised back to the time
//! domain by adding shifted copies of that row's atom. Rows are independent;
//! their contributions are summed in row order so the output does not depend
//! on scheduling.

use std::time::{Duration, Instant};

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::cwt::{Analyzer, ScaleGrid, Tfr, TfrKind};
use crate::error::{Error, Result};
use crate::ntewt::{process_row, Accumulation, NtewtConfig};
use crate::signal::Signal;
use crate::spectral::{FourierPlan, WaveletParams};

#[derive(Debug, Clone, PartialEq)]
pub struct FilterStats {
    /// Surviving points per scale row.
    pub surviving: Vec<usize>,
    pub runtime: Duration,
}

impl FilterStats {
    pub fn total_surviving(&self) -> usize {
        self.surviving.iter().sum()
    }
}

#[derive(Debug, Clone)]
pub struct FilterResult {
    pub filtered: Signal,
    pub nte: Option<Tfr>,
    pub stats: FilterStats,
}

/// Time-domain atom `ψ[j,k]`: the inverse DFT of the sampled Morlet spectrum
/// at scale `a[k]`, circularly delayed by `j` samples.
pub fn wavelet_atom(grid: &ScaleGrid, params: &WaveletParams, j: usize, k: usize) -> Result<Vec<Complex64>> {
    if j >= grid.n() || k >= grid.rows() {
        return Err(Error::param(format!("atom index (j={j}, k={k}) outside {}x{}", grid.n(), grid.rows())));
    }
    let plan = FourierPlan::new(grid.n())?;
    let base = base_atom(&plan, grid, params, k);
    Ok(shifted(&base, j))
}

fn base_atom(plan: &FourierPlan, grid: &ScaleGrid, params: &WaveletParams, k: usize) -> Vec<Complex64> {
    let a = grid.a[k];
    let mut buf: Vec<Complex64> = grid.omega.iter().map(|&w| Complex64::new(params.spectrum_at(a * w), 0.0)).collect();
    plan.inverse(&mut buf);
    buf
}

fn shifted(base: &[Complex64], j: usize) -> Vec<Complex64> {
    let n = base.len();
    (0..n).map(|l| base[(l + n - j % n) % n]).collect()
}

/// Per-row output: time-domain contribution, optional NTe row, survivors.
type RowResult = (Option<Vec<Complex64>>, Option<Vec<Complex64>>, usize);

/// Filter configured once and applied to any number of signals.
#[derive(Debug, Clone, Copy)]
pub struct NtewtFilter {
    params: WaveletParams,
    cfg: NtewtConfig,
    keep_tfr: bool,
}

impl NtewtFilter {
    pub fn new(params: WaveletParams, cfg: NtewtConfig) -> Self {
        Self { params, cfg, keep_tfr: false }
    }

    /// Also return the reassigned representation.
    pub fn keep_tfr(mut self, keep: bool) -> Self {
        self.keep_tfr = keep;
        self
    }

    pub fn run(&self, x: &Signal) -> Result<FilterResult> {
        let start = Instant::now();
        self.cfg.validate()?;
        let an = Analyzer::new(x, &self.params)?;
        let grid = an.grid();
        let n = grid.n();
        let cfg = &self.cfg;
        let params = &self.params;

        let rows: Vec<RowResult> = (0..grid.rows())
            .into_par_iter()
            .map(|k| {
                let row = process_row(&an, k, cfg);
                let contribution = if row.surviving > 0 {
                    let base = base_atom(an.plan(), grid, params, k);
                    let a = grid.a[k];
                    let mut acc = vec![Complex64::new(0.0, 0.0); n];
                    for j in 0..n {
                        if row.nte[j] == Complex64::new(0.0, 0.0) {
                            continue;
                        }
                        let c = a * match cfg.accumulation {
                            Accumulation::Renormalized => row.nte[j],
                            Accumulation::Printed => row.w[j],
                        };
                        // ψ[j,k][l] = base[l - j]
                        let (head, tail) = base.split_at(n - j);
                        for (o, b) in acc[..j].iter_mut().zip(tail) {
                            *o += c * b;
                        }
                        for (o, b) in acc[j..].iter_mut().zip(head) {
                            *o += c * b;
                        }
                    }
                    Some(acc)
                } else {
                    None
                };
                let nte = self.keep_tfr.then_some(row.nte);
                (contribution, nte, row.surviving)
            })
            .collect();

        let mut out = vec![Complex64::new(0.0, 0.0); n];
        let mut surviving = Vec::with_capacity(rows.len());
        let mut nte_rows = Vec::new();
        for (contribution, nte, count) in rows {
            if let Some(c) = contribution {
                out.iter_mut().zip(c).for_each(|(o, v)| *o += v);
            }
            if let Some(r) = nte {
                nte_rows.push(r);
            }
            surviving.push(count);
        }

        let nte = if self.keep_tfr {
            let flat: Vec<Complex64> = nte_rows.into_iter().flatten().collect();
            let coeffs = Array2::from_shape_vec((grid.rows(), n), flat).map_err(|e| Error::param(e.to_string()))?;
            Some(Tfr::new(coeffs, TfrKind::NTe, grid.clone())?)
        } else {
            None
        };
        let filtered = Signal::new(out.iter().map(|v| 2.0 * v.re).collect(), x.sample_rate())?;
        Ok(FilterResult { filtered, nte, stats: FilterStats { surviving, runtime: start.elapsed() } })
    }
}

/// `x_fil = 2 Re Σ_j Σ_k a[k]·NTe[j,k]·ψ[j,k]`, accumulated only where
/// `NTe[j,k] ≠ 0`.
pub fn ntewt_filter(x: &Signal, params: &WaveletParams, cfg: &NtewtConfig) -> Result<FilterResult> {
    NtewtFilter::new(*params, *cfg).run(x)
}
