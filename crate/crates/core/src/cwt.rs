//! Row-wise FFT evaluation of the wavelet time-frequency representations.
//!
//! Every TFR row `k` is `idft(x̂ · K_k)` for a frequency-domain kernel
//! `K_k(ω)` built from the Morlet spectrum at scale `a[k] = 1/(k+1)`:
//!
//! | kind        | kernel                 |
//! |-------------|------------------------|
//! | `W`         | `ψ̂(aω)`                |
//! | `WTpsi`     | `-i ψ̂'(aω)`            |
//! | `DbW`       | `iω ψ̂(aω)`             |
//! | `DbWTpsi`   | `ω ψ̂'(aω)`             |
//!
//! where `ψ̂'` is the derivative with respect to its argument, so that
//! `a·W^{tψ}/W^ψ` is the time offset of the analysed energy relative to `b`.
//! The boundary convention is circular.

use ndarray::{Array2, ArrayView1, Axis};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::signal::Signal;
use crate::spectral::{omega_grid, FourierPlan, WaveletParams};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TfrKind {
    W,
    WTpsi,
    DbW,
    DbWTpsi,
    NTe,
}

impl TfrKind {
    pub fn tag(self) -> u8 {
        match self {
            TfrKind::W => 0,
            TfrKind::WTpsi => 1,
            TfrKind::DbW => 2,
            TfrKind::DbWTpsi => 3,
            TfrKind::NTe => 4,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Some(match tag {
            0 => TfrKind::W,
            1 => TfrKind::WTpsi,
            2 => TfrKind::DbW,
            3 => TfrKind::DbWTpsi,
            4 => TfrKind::NTe,
            _ => return None,
        })
    }
}

/// Scale, time and frequency axes of an `n`-sample TFR.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleGrid {
    /// `a[k] = 1/(k+1)`, `k = 0..n/2`.
    pub a: Vec<f64>,
    /// `b[j] = j/n`, `j = 0..n`.
    pub b: Vec<f64>,
    /// `ω[l] = 2πl`, `l = 0..n`.
    pub omega: Vec<f64>,
    /// Physical frequency, in Hz, at which row `k`'s kernel peaks:
    /// `(k+1)·ω_ψ/(2π)·(f_s/n)`.
    pub center_freq_hz: Vec<f64>,
    pub sample_rate: f64,
}

impl ScaleGrid {
    pub fn new(n: usize, sample_rate: f64, omega_psi: f64) -> Result<Self> {
        if n < 2 || !n.is_multiple_of(2) {
            return Err(Error::param(format!("grid length must be even and >= 2, got {n}")));
        }
        let rows = n / 2;
        let bin_hz = sample_rate / n as f64;
        Ok(Self {
            a: (0..rows).map(|k| 1.0 / (k + 1) as f64).collect(),
            b: (0..n).map(|j| j as f64 / n as f64).collect(),
            omega: omega_grid(n),
            center_freq_hz: (0..rows).map(|k| (k + 1) as f64 * omega_psi / std::f64::consts::TAU * bin_hz).collect(),
            sample_rate,
        })
    }

    /// Number of time samples.
    pub fn n(&self) -> usize {
        self.b.len()
    }

    /// Number of scale rows, `n/2`.
    pub fn rows(&self) -> usize {
        self.a.len()
    }

    /// Row whose centre frequency is closest to `freq_hz`.
    pub fn nearest_row(&self, freq_hz: f64) -> usize {
        self.center_freq_hz
            .iter()
            .enumerate()
            .min_by(|x, y| (x.1 - freq_hz).abs().total_cmp(&(y.1 - freq_hz).abs()))
            .map(|(k, _)| k)
            .unwrap_or(0)
    }
}

/// A dense complex time-frequency representation.
///
/// Stored row-major by scale: `coeffs[[k, j]]` is the coefficient at time
/// `b[j]` and scale `a[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tfr {
    coeffs: Array2<Complex64>,
    kind: TfrKind,
    grid: ScaleGrid,
}

impl Tfr {
    pub fn new(coeffs: Array2<Complex64>, kind: TfrKind, grid: ScaleGrid) -> Result<Self> {
        if coeffs.dim() != (grid.rows(), grid.n()) {
            return Err(Error::param(format!(
                "coefficient matrix is {:?}, grid expects ({}, {})",
                coeffs.dim(),
                grid.rows(),
                grid.n()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::param("TFR coefficients must be finite"));
        }
        Ok(Self { coeffs, kind, grid })
    }

    pub fn zeros(kind: TfrKind, grid: ScaleGrid) -> Self {
        let coeffs = Array2::zeros((grid.rows(), grid.n()));
        Self { coeffs, kind, grid }
    }

    pub fn kind(&self) -> TfrKind {
        self.kind
    }

    pub fn grid(&self) -> &ScaleGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &Array2<Complex64> {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Array2<Complex64> {
        self.coeffs
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn rows(&self) -> usize {
        self.grid.rows()
    }

    /// Coefficient at time index `j`, scale index `k`.
    pub fn get(&self, j: usize, k: usize) -> Complex64 {
        self.coeffs[[k, j]]
    }

    pub fn row(&self, k: usize) -> ArrayView1<'_, Complex64> {
        self.coeffs.row(k)
    }

    /// Euclidean norm of scale row `k`.
    pub fn row_norm(&self, k: usize) -> f64 {
        row_norm(self.coeffs.row(k).iter())
    }

    /// Scalogram, `|coeffs|`.
    pub fn magnitude(&self) -> Array2<f64> {
        self.coeffs.mapv(|c| c.norm())
    }
}

pub(crate) fn row_norm<'a>(row: impl Iterator<Item = &'a Complex64>) -> f64 {
    row.map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Frequency-domain kernel of `kind` at scale `a`, sampled on `omegas`.
pub fn row_kernel(kind: TfrKind, params: &WaveletParams, a: f64, omegas: &[f64]) -> Result<Vec<Complex64>> {
    let kernel = omegas
        .iter()
        .map(|&w| match kind {
            TfrKind::W => Ok(Complex64::new(params.spectrum_at(a * w), 0.0)),
            TfrKind::WTpsi => Ok(-I * (params.derivative_at(a, w) / a)),
            TfrKind::DbW => Ok(I * (w * params.spectrum_at(a * w))),
            TfrKind::DbWTpsi => Ok(Complex64::new(w * params.derivative_at(a, w) / a, 0.0)),
            TfrKind::NTe => Err(Error::Usage("NTe has no analysis kernel".into())),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(kernel)
}

/// The four rows needed at one scale.
#[derive(Debug, Clone)]
pub struct ScaleRows {
    pub w: Vec<Complex64>,
    pub w_tpsi: Vec<Complex64>,
    pub db_w: Vec<Complex64>,
    pub db_w_tpsi: Vec<Complex64>,
}

/// Precomputed spectrum of one signal, ready to produce TFR rows.
#[derive(Debug, Clone)]
pub struct Analyzer {
    params: WaveletParams,
    grid: ScaleGrid,
    plan: FourierPlan,
    spectrum: Vec<Complex64>,
}

impl Analyzer {
    pub fn new(x: &Signal, params: &WaveletParams) -> Result<Self> {
        params.validate()?;
        let n = x.len();
        if n < 4 {
            return Err(Error::param(format!("TFR needs n >= 4, got {n}")));
        }
        let grid = ScaleGrid::new(n, x.sample_rate(), params.omega_psi)?;
        let plan = FourierPlan::new(n)?;
        let mut spectrum: Vec<Complex64> = x.samples().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        plan.forward(&mut spectrum);
        Ok(Self { params: *params, grid, plan, spectrum })
    }

    pub fn grid(&self) -> &ScaleGrid {
        &self.grid
    }

    pub fn params(&self) -> &WaveletParams {
        &self.params
    }

    pub fn plan(&self) -> &FourierPlan {
        &self.plan
    }

    /// `x̂`, the forward DFT of the analysed signal.
    pub fn spectrum(&self) -> &[Complex64] {
        &self.spectrum
    }

    fn apply(&self, kernel: impl Iterator<Item = Complex64>) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = self.spectrum.iter().zip(kernel).map(|(x, k)| x * k).collect();
        self.plan.inverse(&mut buf);
        buf
    }

    /// Row `k` of the TFR of `kind`.
    pub fn row(&self, kind: TfrKind, k: usize) -> Result<Vec<Complex64>> {
        let kernel = row_kernel(kind, &self.params, self.grid.a[k], &self.grid.omega)?;
        Ok(self.apply(kernel.into_iter()))
    }

    /// All four analysis rows at scale `k`, sharing the kernel evaluation.
    pub fn scale_rows(&self, k: usize) -> ScaleRows {
        let a = self.grid.a[k];
        let omega = &self.grid.omega;
        let psi: Vec<f64> = omega.iter().map(|&w| self.params.spectrum_at(a * w)).collect();
        // ψ̂'(aω) = D_ω ψ̂(aω) / a
        let dpsi: Vec<f64> = omega.iter().map(|&w| self.params.derivative_at(a, w) / a).collect();

        let w = self.apply(psi.iter().map(|&p| Complex64::new(p, 0.0)));
        let w_tpsi = self.apply(dpsi.iter().map(|&d| -I * d));
        let db_w = self.apply(omega.iter().zip(&psi).map(|(&w, &p)| I * (w * p)));
        let db_w_tpsi = self.apply(omega.iter().zip(&dpsi).map(|(&w, &d)| Complex64::new(w * d, 0.0)));
        ScaleRows { w, w_tpsi, db_w, db_w_tpsi }
    }

    /// Full TFR of `kind`, rows evaluated in parallel.
    pub fn compute(&self, kind: TfrKind) -> Result<Tfr> {
        if kind == TfrKind::NTe {
            return Err(Error::Usage("NTe is produced by reassignment".into()));
        }
        let mut coeffs = Array2::zeros((self.grid.rows(), self.grid.n()));
        coeffs.axis_iter_mut(Axis(0)).into_par_iter().enumerate().try_for_each(|(k, mut out)| -> Result<()> {
            let row = self.row(kind, k)?;
            out.iter_mut().zip(row).for_each(|(o, v)| *o = v);
            Ok(())
        })?;
        Tfr::new(coeffs, kind, self.grid.clone())
    }
}

pub fn compute_w(x: &Signal, params: &WaveletParams) -> Result<Tfr> {
    Analyzer::new(x, params)?.compute(TfrKind::W)
}

pub fn compute_w_tpsi(x: &Signal, params: &WaveletParams) -> Result<Tfr> {
    Analyzer::new(x, params)?.compute(TfrKind::WTpsi)
}

pub fn compute_db_w(x: &Signal, params: &WaveletParams) -> Result<Tfr> {
    Analyzer::new(x, params)?.compute(TfrKind::DbW)
}

pub fn compute_db_w_tpsi(x: &Signal, params: &WaveletParams) -> Result<Tfr> {
    Analyzer::new(x, params)?.compute(TfrKind::DbWTpsi)
}

/// Inverse CWT by summing dilated, shifted atoms weighted by `a[k]`:
/// `x_rec[l] = 2 Re Σ_j Σ_k a[k] c[j,k] ψ[j,k][l]`.
///
/// Each row's sum over shifts is a circular convolution with the atom, so it
/// is evaluated as `idft(dft(c[·,k]) · ψ̂(a[k]ω))` and accumulated in the
/// frequency domain in row order. The result is only defined up to a
/// constant factor; no renormalisation is applied.
pub fn reconstruct_from_cwt(tfr: &Tfr, params: &WaveletParams) -> Result<Signal> {
    if !matches!(tfr.kind(), TfrKind::W | TfrKind::NTe) {
        return Err(Error::Usage(format!("reconstruction needs a W or NTe representation, got {:?}", tfr.kind())));
    }
    let grid = tfr.grid();
    let n = grid.n();
    let plan = FourierPlan::new(n)?;

    let contributions: Vec<Option<Vec<Complex64>>> = tfr
        .coeffs()
        .axis_iter(Axis(0))
        .into_par_iter()
        .enumerate()
        .map(|(k, row)| {
            if row.iter().all(|c| *c == Complex64::new(0.0, 0.0)) {
                return None;
            }
            let a = grid.a[k];
            let mut buf: Vec<Complex64> = row.to_vec();
            plan.forward(&mut buf);
            for (v, &w) in buf.iter_mut().zip(&grid.omega) {
                *v *= a * params.spectrum_at(a * w);
            }
            Some(buf)
        })
        .collect();

    let mut acc = vec![Complex64::new(0.0, 0.0); n];
    for c in contributions.into_iter().flatten() {
        acc.iter_mut().zip(c).for_each(|(s, v)| *s += v);
    }
    plan.inverse(&mut acc);
    Signal::new(acc.iter().map(|v| 2.0 * v.re).collect(), grid.sample_rate)
}
