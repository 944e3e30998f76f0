//! Newton group-delay estimation and fixed-point reassignment.
//!
//! For each TFR point the complex time operator
//! `t̃ = b + a·W^{tψ}/W^ψ` is refined by one Newton step towards its fixed
//! point, `t̄ = b - (b - t̃)/(1 - ∂_b t̃)`. Points where `|b - t̄| < ε` lie on
//! (or next to) the group-delay curve of a chirp-like component and are the
//! only ones kept by the reassignment.

use ndarray::{Array2, Axis, Zip};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::cwt::{row_norm, Analyzer, ScaleGrid, ScaleRows, Tfr, TfrKind};
use crate::error::{Error, Result};
use crate::signal::Signal;
use crate::spectral::WaveletParams;

/// How the distance between `b` and the Newton estimate is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MetricMode {
    /// `|b - t̄|` with `t̄` complex.
    #[default]
    Modulus,
    /// `|Re(b - t̄)|`.
    RealPart,
}

/// Which coefficient the fused filter accumulates at a surviving point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Accumulation {
    /// The renormalised NTe coefficient, so the filter output equals the
    /// inverse transform of the reassigned representation.
    #[default]
    Renormalized,
    /// The original W coefficient at the surviving point, ignoring the row
    /// renormalisation.
    Printed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NtewtConfig {
    /// Fixed-point tolerance in normalised time (record length = 1).
    pub epsilon: f64,
    /// `|W|` below this fraction of the row peak is treated as zero.
    pub magnitude_guard: f64,
    /// `|1 - ∂_b t̃|` below this makes the Newton step invalid.
    pub denom_guard: f64,
    pub metric: MetricMode,
    pub accumulation: Accumulation,
}

impl Default for NtewtConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            magnitude_guard: 1e-12,
            denom_guard: 1e-8,
            metric: MetricMode::Modulus,
            accumulation: Accumulation::Renormalized,
        }
    }
}

impl NtewtConfig {
    pub fn with_epsilon(epsilon: f64) -> Self {
        Self { epsilon, ..Self::default() }
    }

    /// `epsilon = 0` is accepted and selects nothing.
    pub fn validate(&self) -> Result<()> {
        if self.epsilon.is_nan() || self.epsilon < 0.0 {
            return Err(Error::param(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        if self.magnitude_guard.is_nan()
            || self.denom_guard.is_nan()
            || self.magnitude_guard <= 0.0
            || self.denom_guard <= 0.0
        {
            return Err(Error::param("guards must be > 0"));
        }
        Ok(())
    }
}

/// `t̃` together with the mask of points where `W^ψ` cleared the guard.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTime {
    pub values: Array2<Complex64>,
    pub valid: Array2<bool>,
}

/// `|b[j] - t̄[j,k]|` on the TFR grid, stored like [`Tfr`] as `[[k, j]]`.
///
/// Invalid points hold `+∞` and are never selected.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointField {
    pub metric: Array2<f64>,
    pub valid: Array2<bool>,
}

impl FixedPointField {
    /// Points that pass the tolerance test.
    pub fn support(&self, epsilon: f64) -> Array2<bool> {
        Zip::from(&self.metric).and(&self.valid).map_collect(|&m, &v| v && m < epsilon)
    }

    /// Number of surviving points per scale row.
    pub fn surviving_per_row(&self, epsilon: f64) -> Vec<usize> {
        self.support(epsilon).axis_iter(Axis(0)).map(|r| r.iter().filter(|&&s| s).count()).collect()
    }

    pub fn rows(&self) -> usize {
        self.metric.nrows()
    }
}

fn magnitude_floor(w: &[Complex64], guard: f64) -> f64 {
    let peak = w.iter().map(|c| c.norm()).fold(0.0, f64::max);
    guard * peak
}

/// One scale row of the fixed-point field.
fn fixed_point_row(rows: &ScaleRows, a: f64, b: &[f64], cfg: &NtewtConfig, metric: &mut [f64], valid: &mut [bool]) {
    let floor = magnitude_floor(&rows.w, cfg.magnitude_guard);
    for j in 0..b.len() {
        let w = rows.w[j];
        let wn = w.norm();
        if wn == 0.0 || wn < floor {
            metric[j] = f64::INFINITY;
            valid[j] = false;
            continue;
        }
        // b - t̃ and 1 - ∂_b t̃; b itself cancels.
        let offset = -a * rows.w_tpsi[j] / w;
        let denom = -a * (rows.db_w_tpsi[j] * w - rows.w_tpsi[j] * rows.db_w[j]) / (w * w);
        if denom.norm() < cfg.denom_guard || denom.is_nan() {
            metric[j] = f64::INFINITY;
            valid[j] = false;
            continue;
        }
        // b - t̄ = (b - t̃)/(1 - ∂_b t̃)
        let step = offset / denom;
        let m = match cfg.metric {
            MetricMode::Modulus => step.norm(),
            MetricMode::RealPart => step.re.abs(),
        };
        if m.is_finite() {
            metric[j] = m;
            valid[j] = true;
        } else {
            metric[j] = f64::INFINITY;
            valid[j] = false;
        }
    }
}

fn check_same_grid(tfrs: &[(&Tfr, TfrKind)], grid: &ScaleGrid) -> Result<()> {
    for (t, kind) in tfrs {
        if t.kind() != *kind {
            return Err(Error::Usage(format!("expected {:?}, got {:?}", kind, t.kind())));
        }
        if t.rows() != grid.rows() || t.n() != grid.n() {
            return Err(Error::param("TFR dimensions do not match the grid"));
        }
    }
    Ok(())
}

/// `t̃[j,k] = b[j] + a[k]·W^{tψ}[j,k]/W^ψ[j,k]` where `|W^ψ|` clears the
/// magnitude guard; other points are flagged invalid and hold `b[j]`.
pub fn complex_time_operator(w: &Tfr, w_tpsi: &Tfr, grid: &ScaleGrid, cfg: &NtewtConfig) -> Result<ComplexTime> {
    check_same_grid(&[(w, TfrKind::W), (w_tpsi, TfrKind::WTpsi)], grid)?;
    let shape = (grid.rows(), grid.n());
    let mut values = Array2::zeros(shape);
    let mut valid = Array2::from_elem(shape, false);
    for k in 0..grid.rows() {
        let wr = w.row(k);
        let floor = cfg.magnitude_guard * wr.iter().map(|c| c.norm()).fold(0.0, f64::max);
        for j in 0..grid.n() {
            let b = Complex64::new(grid.b[j], 0.0);
            let wn = wr[j].norm();
            if wn > 0.0 && wn >= floor {
                values[[k, j]] = b + grid.a[k] * w_tpsi.get(j, k) / wr[j];
                valid[[k, j]] = true;
            } else {
                values[[k, j]] = b;
            }
        }
    }
    Ok(ComplexTime { values, valid })
}

/// Newton group-delay estimate and fixed-point metric.
///
/// `∂_b t̃ = 1 + a·(∂_bW^{tψ}·W^ψ - W^{tψ}·∂_bW^ψ)/(W^ψ)²`,
/// `t̄ = b - (b - t̃)/(1 - ∂_b t̃)` and the metric is `|b - t̄|`.
pub fn newton_gd(
    t_tilde: &ComplexTime,
    db_w: &Tfr,
    db_w_tpsi: &Tfr,
    w: &Tfr,
    w_tpsi: &Tfr,
    grid: &ScaleGrid,
    cfg: &NtewtConfig,
) -> Result<FixedPointField> {
    check_same_grid(
        &[(w, TfrKind::W), (w_tpsi, TfrKind::WTpsi), (db_w, TfrKind::DbW), (db_w_tpsi, TfrKind::DbWTpsi)],
        grid,
    )?;
    if t_tilde.values.dim() != (grid.rows(), grid.n()) {
        return Err(Error::param("t~ dimensions do not match the grid"));
    }
    let shape = (grid.rows(), grid.n());
    let mut metric = Array2::from_elem(shape, f64::INFINITY);
    let mut valid = Array2::from_elem(shape, false);
    for k in 0..grid.rows() {
        let a = grid.a[k];
        for j in 0..grid.n() {
            if !t_tilde.valid[[k, j]] {
                continue;
            }
            let wv = w.get(j, k);
            let b = Complex64::new(grid.b[j], 0.0);
            let dt = 1.0 + a * (db_w_tpsi.get(j, k) * wv - w_tpsi.get(j, k) * db_w.get(j, k)) / (wv * wv);
            let denom = 1.0 - dt;
            if denom.norm() < cfg.denom_guard || denom.is_nan() {
                continue;
            }
            let t_bar = b - (b - t_tilde.values[[k, j]]) / denom;
            let m = match cfg.metric {
                MetricMode::Modulus => (b - t_bar).norm(),
                MetricMode::RealPart => (b - t_bar).re.abs(),
            };
            if m.is_finite() {
                metric[[k, j]] = m;
                valid[[k, j]] = true;
            }
        }
    }
    Ok(FixedPointField { metric, valid })
}

/// Zeroes every coefficient outside the fixed-point support, then rescales
/// each surviving row to the two-norm of the corresponding W row.
pub fn reassign(w: &Tfr, field: &FixedPointField, cfg: &NtewtConfig) -> Result<Tfr> {
    if w.kind() != TfrKind::W {
        return Err(Error::Usage(format!("reassignment needs W, got {:?}", w.kind())));
    }
    if field.metric.dim() != w.coeffs().dim() {
        return Err(Error::param("fixed-point field does not match the TFR"));
    }
    let support = field.support(cfg.epsilon);
    let mut coeffs = w.coeffs().clone();
    coeffs
        .axis_iter_mut(Axis(0))
        .into_par_iter()
        .zip(support.axis_iter(Axis(0)).into_par_iter())
        .zip(w.coeffs().axis_iter(Axis(0)).into_par_iter())
        .for_each(|((mut row, keep), full)| {
            let row = row.as_slice_mut().expect("rows are contiguous");
            mask_and_rescale(row, keep.iter().copied(), full.iter());
        });
    Tfr::new(coeffs, TfrKind::NTe, w.grid().clone())
}

/// Applies the support mask to `row` (a copy of the W row) and rescales.
/// Returns the number of surviving points.
fn mask_and_rescale<'a>(
    row: &mut [Complex64],
    keep: impl Iterator<Item = bool>,
    full: impl Iterator<Item = &'a Complex64>,
) -> usize {
    let full_norm = row_norm(full);
    let mut count = 0;
    for (c, k) in row.iter_mut().zip(keep) {
        if k {
            count += 1;
        } else {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    let kept_norm = row_norm(row.iter());
    if kept_norm > 0.0 {
        let scale = full_norm / kept_norm;
        row.iter_mut().for_each(|c| *c *= scale);
    }
    count
}

/// `log10` of the metric; invalid points map to `cap`, and values above
/// `cap` are clipped to it.
pub fn export_fixed_point_log(field: &FixedPointField, cap: f64) -> Array2<f64> {
    Zip::from(&field.metric).and(&field.valid).map_collect(|&m, &v| if v { m.log10().min(cap) } else { cap })
}

/// Default sentinel for [`export_fixed_point_log`].
pub const LOG_METRIC_CAP: f64 = 6.0;

/// Everything computed for one scale row of the transform.
#[derive(Debug, Clone)]
pub(crate) struct RowOutcome {
    pub w: Vec<Complex64>,
    pub nte: Vec<Complex64>,
    pub metric: Vec<f64>,
    pub valid: Vec<bool>,
    pub surviving: usize,
}

pub(crate) fn process_row(an: &Analyzer, k: usize, cfg: &NtewtConfig) -> RowOutcome {
    let grid = an.grid();
    let rows = an.scale_rows(k);
    let n = grid.n();
    let mut metric = vec![f64::INFINITY; n];
    let mut valid = vec![false; n];
    fixed_point_row(&rows, grid.a[k], &grid.b, cfg, &mut metric, &mut valid);
    let mut nte = rows.w.clone();
    let keep = metric.iter().zip(&valid).map(|(&m, &v)| v && m < cfg.epsilon);
    let surviving = mask_and_rescale(&mut nte, keep, rows.w.iter());
    RowOutcome { w: rows.w, nte, metric, valid, surviving }
}

/// Transform outputs: W, the fixed-point field and the reassigned NTe.
#[derive(Debug, Clone)]
pub struct NtewtAnalysis {
    pub w: Tfr,
    pub field: FixedPointField,
    pub nte: Tfr,
    pub surviving: Vec<usize>,
}

/// Computes W and the NTe representation row by row without keeping the
/// intermediate derivative TFRs.
pub fn analyze(x: &Signal, params: &WaveletParams, cfg: &NtewtConfig) -> Result<NtewtAnalysis> {
    cfg.validate()?;
    let an = Analyzer::new(x, params)?;
    let grid = an.grid().clone();
    let outcomes: Vec<RowOutcome> = (0..grid.rows()).into_par_iter().map(|k| process_row(&an, k, cfg)).collect();

    let shape = (grid.rows(), grid.n());
    let mut w = Array2::zeros(shape);
    let mut nte = Array2::zeros(shape);
    let mut metric = Array2::zeros(shape);
    let mut valid = Array2::from_elem(shape, false);
    let mut surviving = Vec::with_capacity(grid.rows());
    for (k, o) in outcomes.into_iter().enumerate() {
        w.row_mut(k).iter_mut().zip(o.w).for_each(|(d, s)| *d = s);
        nte.row_mut(k).iter_mut().zip(o.nte).for_each(|(d, s)| *d = s);
        metric.row_mut(k).iter_mut().zip(o.metric).for_each(|(d, s)| *d = s);
        valid.row_mut(k).iter_mut().zip(o.valid).for_each(|(d, s)| *d = s);
        surviving.push(o.surviving);
    }
    Ok(NtewtAnalysis {
        w: Tfr::new(w, TfrKind::W, grid.clone())?,
        field: FixedPointField { metric, valid },
        nte: Tfr::new(nte, TfrKind::NTe, grid)?,
        surviving,
    })
}

/// The four analysis TFRs of one signal.
#[derive(Debug, Clone)]
pub struct AnalysisTfrs {
    pub w: Tfr,
    pub w_tpsi: Tfr,
    pub db_w: Tfr,
    pub db_w_tpsi: Tfr,
}

impl AnalysisTfrs {
    pub fn compute(x: &Signal, params: &WaveletParams) -> Result<Self> {
        let an = Analyzer::new(x, params)?;
        Ok(Self {
            w: an.compute(TfrKind::W)?,
            w_tpsi: an.compute(TfrKind::WTpsi)?,
            db_w: an.compute(TfrKind::DbW)?,
            db_w_tpsi: an.compute(TfrKind::DbWTpsi)?,
        })
    }

    /// `complex_time_operator` followed by `newton_gd`.
    pub fn fixed_point_field(&self, cfg: &NtewtConfig) -> Result<FixedPointField> {
        let grid = self.w.grid();
        let t = complex_time_operator(&self.w, &self.w_tpsi, grid, cfg)?;
        newton_gd(&t, &self.db_w, &self.db_w_tpsi, &self.w, &self.w_tpsi, grid, cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::white_noise;

    const FS: f64 = 180e3;

    fn impulse(n: usize, j0: usize) -> Signal {
        let mut v = vec![0.0; n];
        v[j0] = 1.0;
        Signal::new(v, FS).unwrap()
    }

    #[test]
    fn matrix_and_fused_routes_agree() {
        let x = white_noise(64, FS, 9).unwrap();
        let p = WaveletParams::new(2.0, 6.0);
        let cfg = NtewtConfig::with_epsilon(5e-3);
        let tfrs = AnalysisTfrs::compute(&x, &p).unwrap();
        let field = tfrs.fixed_point_field(&cfg).unwrap();
        let fused = analyze(&x, &p, &cfg).unwrap();
        assert_eq!(field.valid, fused.field.valid);
        for (a, b) in field.metric.iter().zip(&fused.field.metric) {
            if a.is_finite() {
                assert!((a - b).abs() <= 1e-9 * a.max(1e-12), "{a} vs {b}");
            }
        }
        let nte = reassign(&tfrs.w, &field, &cfg).unwrap();
        for (a, b) in nte.coeffs().iter().zip(fused.nte.coeffs()) {
            assert!((a - b).norm() <= 1e-9 * (1.0 + a.norm()));
        }
    }

    #[test]
    fn impulse_time_operator_points_at_impulse() {
        let n = 64;
        let j0 = 20;
        let x = impulse(n, j0);
        let p = WaveletParams::new(1.0, 6.0);
        let tfrs = AnalysisTfrs::compute(&x, &p).unwrap();
        let grid = tfrs.w.grid().clone();
        let t = complex_time_operator(&tfrs.w, &tfrs.w_tpsi, &grid, &NtewtConfig::default()).unwrap();
        let target = grid.b[j0];
        let mut checked = 0;
        for k in 0..grid.rows() {
            // cone of influence: the atom's time spread is σ·a[k] in record units
            let spread = p.sigma * grid.a[k];
            if spread > 0.1 {
                continue;
            }
            let peak = tfrs.w.row(k).iter().map(|c| c.norm()).fold(0.0, f64::max);
            for j in 0..n {
                let d = (grid.b[j] - target).abs();
                if d <= 2.0 * spread && tfrs.w.get(j, k).norm() > 1e-3 * peak {
                    assert!(t.valid[[k, j]]);
                    let err = (t.values[[k, j]].re - target).abs();
                    assert!(err <= 1.0 / n as f64, "k={k} j={j} err={err}");
                    checked += 1;
                }
            }
        }
        assert!(checked > 50);
    }

    #[test]
    fn zero_time_weighted_tfr_leaves_b() {
        let x = white_noise(16, FS, 2).unwrap();
        let p = WaveletParams::new(2.0, 6.0);
        let w = crate::cwt::compute_w(&x, &p).unwrap();
        let wt = Tfr::zeros(TfrKind::WTpsi, w.grid().clone());
        let t = complex_time_operator(&w, &wt, w.grid(), &NtewtConfig::default()).unwrap();
        for k in 0..w.rows() {
            for j in 0..w.n() {
                assert_eq!(t.values[[k, j]], Complex64::new(w.grid().b[j], 0.0));
            }
        }
    }

    #[test]
    fn small_coefficients_are_invalid() {
        let g = ScaleGrid::new(8, FS, 6.0).unwrap();
        let mut c = Array2::from_elem((4, 8), Complex64::new(1.0, 0.0));
        c[[1, 3]] = Complex64::new(1e-14, 0.0);
        c[[2, 5]] = Complex64::new(0.0, 0.0);
        let w = Tfr::new(c, TfrKind::W, g.clone()).unwrap();
        let wt = Tfr::zeros(TfrKind::WTpsi, g.clone());
        let t = complex_time_operator(&w, &wt, &g, &NtewtConfig::default()).unwrap();
        assert!(!t.valid[[1, 3]]);
        assert!(!t.valid[[2, 5]]);
        assert_eq!(t.valid.iter().filter(|&&v| !v).count(), 2);
    }

    #[test]
    fn fixed_point_has_zero_metric() {
        // t̃ = b everywhere, ∂_b t̃ = 1 + a·(1·1 - 0)/1 = 1 + a, so the
        // denominator is -a and b - t̄ = 0.
        let g = ScaleGrid::new(8, FS, 6.0).unwrap();
        let ones = Array2::from_elem((4, 8), Complex64::new(1.0, 0.0));
        let w = Tfr::new(ones.clone(), TfrKind::W, g.clone()).unwrap();
        let wt = Tfr::zeros(TfrKind::WTpsi, g.clone());
        let dbw = Tfr::zeros(TfrKind::DbW, g.clone());
        let dbwt = Tfr::new(ones, TfrKind::DbWTpsi, g.clone()).unwrap();
        let cfg = NtewtConfig::default();
        let t = complex_time_operator(&w, &wt, &g, &cfg).unwrap();
        let f = newton_gd(&t, &dbw, &dbwt, &w, &wt, &g, &cfg).unwrap();
        assert!(f.valid.iter().all(|&v| v));
        assert!(f.metric.iter().all(|&m| m == 0.0));
    }

    #[test]
    fn vanishing_newton_denominator_is_invalid() {
        let g = ScaleGrid::new(8, FS, 6.0).unwrap();
        let ones = Array2::from_elem((4, 8), Complex64::new(1.0, 0.0));
        let w = Tfr::new(ones, TfrKind::W, g.clone()).unwrap();
        let wt = Tfr::zeros(TfrKind::WTpsi, g.clone());
        let dbw = Tfr::zeros(TfrKind::DbW, g.clone());
        let dbwt = Tfr::zeros(TfrKind::DbWTpsi, g.clone());
        let cfg = NtewtConfig::default();
        let t = complex_time_operator(&w, &wt, &g, &cfg).unwrap();
        let f = newton_gd(&t, &dbw, &dbwt, &w, &wt, &g, &cfg).unwrap();
        assert!(f.valid.iter().all(|&v| !v));
        assert!(f.metric.iter().all(|m| m.is_infinite()));
    }

    #[test]
    fn epsilon_extremes() {
        let x = white_noise(32, FS, 4).unwrap();
        let p = WaveletParams::new(1.0, 6.0);
        let tfrs = AnalysisTfrs::compute(&x, &p).unwrap();
        let mut cfg = NtewtConfig::with_epsilon(0.0);
        let field = tfrs.fixed_point_field(&cfg).unwrap();
        let nte = reassign(&tfrs.w, &field, &cfg).unwrap();
        assert!(nte.coeffs().iter().all(|c| c.norm() == 0.0));

        cfg.epsilon = f64::INFINITY;
        if field.valid.iter().all(|&v| v) {
            let nte = reassign(&tfrs.w, &field, &cfg).unwrap();
            assert_eq!(nte.coeffs(), tfrs.w.coeffs());
        }
    }

    #[test]
    fn rows_keep_their_norm() {
        let x = white_noise(128, FS, 8).unwrap();
        let p = WaveletParams::new(3.0, 6.0);
        let cfg = NtewtConfig::with_epsilon(5e-3);
        let res = analyze(&x, &p, &cfg).unwrap();
        let mut touched = 0;
        for k in 0..res.w.rows() {
            let kept = res.nte.row_norm(k);
            if kept > 0.0 {
                touched += 1;
                let full = res.w.row_norm(k);
                assert!((kept - full).abs() <= 1e-12 * full);
            } else {
                assert_eq!(res.surviving[k], 0);
            }
        }
        assert!(touched > 0);
    }

    #[test]
    fn log_export() {
        let field = FixedPointField {
            metric: Array2::from_shape_vec((1, 3), vec![1e-3, 10.0, f64::INFINITY]).unwrap(),
            valid: Array2::from_shape_vec((1, 3), vec![true, true, false]).unwrap(),
        };
        let log = export_fixed_point_log(&field, 0.5);
        assert!((log[[0, 0]] + 3.0).abs() < 1e-12);
        assert_eq!(log[[0, 1]], 0.5);
        assert_eq!(log[[0, 2]], 0.5);
    }

    #[test]
    fn config_validation() {
        assert!(NtewtConfig::with_epsilon(-1.0).validate().is_err());
        assert!(NtewtConfig::with_epsilon(f64::NAN).validate().is_err());
        assert!(NtewtConfig::with_epsilon(f64::INFINITY).validate().is_ok());
        let c = NtewtConfig { denom_guard: 0.0, ..NtewtConfig::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn real_part_metric_never_exceeds_modulus() {
        let x = white_noise(64, FS, 12).unwrap();
        let p = WaveletParams::new(2.0, 6.0);
        let tfrs = AnalysisTfrs::compute(&x, &p).unwrap();
        let modulus = tfrs.fixed_point_field(&NtewtConfig::default()).unwrap();
        let real =
            tfrs.fixed_point_field(&NtewtConfig { metric: MetricMode::RealPart, ..NtewtConfig::default() }).unwrap();
        for (m, r) in modulus.metric.iter().zip(&real.metric) {
            if m.is_finite() {
                assert!(*r <= *m * (1.0 + 1e-12));
            }
        }
    }
}
