//! Discrete Fourier transform and the frequency-domain Morlet kernel.
//!
//! The transform pair is the unnormalised forward DFT with kernel
//! `exp(-2πi jk/n)` and the inverse carrying the `1/n` factor. Frequencies
//! are normalised so that bin `l` sits at `ω = 2πl`, i.e. time is measured
//! in units of the whole record.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// DFT coefficients, bin `l` at normalised angular frequency `2πl`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub bins: Vec<Complex64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }
}

/// Forward and inverse FFT plans for one length.
#[derive(Clone)]
pub struct FourierPlan {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FourierPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FourierPlan").field("n", &self.n).finish()
    }
}

impl FourierPlan {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("transform length must be positive"));
        }
        let mut planner = FftPlanner::new();
        Ok(Self { n, forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// In-place forward transform.
    pub fn forward(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.n);
        self.forward.process(buf);
    }

    /// In-place inverse transform including the `1/n` factor.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.n);
        self.inverse.process(buf);
        let scale = 1.0 / self.n as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }
}

pub fn dft(x: &[Complex64]) -> Result<Spectrum> {
    let plan = FourierPlan::new(x.len())?;
    let mut bins = x.to_vec();
    plan.forward(&mut bins);
    Ok(Spectrum { bins })
}

pub fn dft_real(x: &[f64]) -> Result<Spectrum> {
    let x: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    dft(&x)
}

pub fn idft(spectrum: &Spectrum) -> Result<Vec<Complex64>> {
    let plan = FourierPlan::new(spectrum.len())?;
    let mut out = spectrum.bins.clone();
    plan.inverse(&mut out);
    Ok(out)
}

/// Normalised angular frequency grid `ω[l] = 2πl`, `l = 0..n`.
pub fn omega_grid(n: usize) -> Vec<f64> {
    (0..n).map(|l| 2.0 * PI * l as f64).collect()
}

/// Which closed form to use for the ω-derivative of the Morlet spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DerivativeForm {
    /// `-aσ²(aω - ω_ψ) ψ̂(aω)`, the exact derivative.
    #[default]
    Analytic,
    /// `-aσ⁵(aω - ω_ψ) ψ̂(aω)`, kept for comparison with the printed formula.
    /// Differs from `Analytic` by the constant `σ³`.
    Printed,
}

/// Morlet width and centre frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveletParams {
    pub sigma: f64,
    pub omega_psi: f64,
    pub derivative: DerivativeForm,
}

/// Ratio `ψ̂(0) / ψ̂(ω_ψ)` above which the one-sided Morlet is not treated
/// as admissible.
pub const ADMISSIBILITY_LIMIT: f64 = 1e-3;

impl WaveletParams {
    pub fn new(sigma: f64, omega_psi: f64) -> Self {
        Self { sigma, omega_psi, derivative: DerivativeForm::Analytic }
    }

    pub fn with_derivative(mut self, form: DerivativeForm) -> Self {
        self.derivative = form;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::param(format!("sigma must be > 0, got {}", self.sigma)));
        }
        if !(self.omega_psi > 0.0 && self.omega_psi.is_finite()) {
            return Err(Error::param(format!("omega_psi must be > 0, got {}", self.omega_psi)));
        }
        let dc_ratio = (-0.5 * (self.sigma * self.omega_psi).powi(2)).exp();
        if dc_ratio >= ADMISSIBILITY_LIMIT {
            return Err(Error::param(format!(
                "Morlet (sigma={}, omega_psi={}) is not admissible: psi_hat(0)/peak = {dc_ratio:.3e}",
                self.sigma, self.omega_psi
            )));
        }
        Ok(())
    }

    /// Peak value `(4πσ²)^{1/4}`.
    pub fn peak(&self) -> f64 {
        (4.0 * PI * self.sigma * self.sigma).powf(0.25)
    }

    /// `ψ̂(u)` for a single dilated frequency `u = aω`.
    #[inline]
    pub fn spectrum_at(&self, u: f64) -> f64 {
        let d = u - self.omega_psi;
        self.peak() * (-0.5 * self.sigma * self.sigma * d * d).exp()
    }

    /// `D_ω ψ̂(aω)` for a single frequency.
    #[inline]
    pub fn derivative_at(&self, a: f64, omega: f64) -> f64 {
        let u = a * omega;
        let factor = match self.derivative {
            DerivativeForm::Analytic => self.sigma.powi(2),
            DerivativeForm::Printed => self.sigma.powi(5),
        };
        -a * factor * (u - self.omega_psi) * self.spectrum_at(u)
    }
}

/// `ψ̂(aω)` sampled on `omegas`.
pub fn morlet_spectrum(params: &WaveletParams, a: f64, omegas: &[f64]) -> Vec<f64> {
    omegas.iter().map(|&w| params.spectrum_at(a * w)).collect()
}

/// `D_ω ψ̂(aω)` sampled on `omegas`.
pub fn morlet_spectrum_derivative(params: &WaveletParams, a: f64, omegas: &[f64]) -> Vec<f64> {
    omegas.iter().map(|&w| params.derivative_at(a, w)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(j, &v)| {
                        let arg = -2.0 * PI * ((j * k) % n) as f64 / n as f64;
                        v * Complex64::from_polar(1.0, arg)
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn impulse_has_flat_spectrum() {
        let mut x = vec![Complex64::new(0.0, 0.0); 16];
        x[0] = Complex64::new(1.0, 0.0);
        let s = dft(&x).unwrap();
        assert!(s.bins.iter().all(|b| (b - Complex64::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn small_vector_matches_direct_sum() {
        let x: Vec<Complex64> = [1.0, 2.0, 3.0, 4.0].iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let oracle = naive_dft(&x);
        let expected = [
            Complex64::new(10.0, 0.0),
            Complex64::new(-2.0, 2.0),
            Complex64::new(-2.0, 0.0),
            Complex64::new(-2.0, -2.0),
        ];
        let fast = dft(&x).unwrap();
        for l in 0..4 {
            assert!((oracle[l] - expected[l]).norm() < 1e-12);
            assert!((fast.bins[l] - expected[l]).norm() < 1e-12);
        }
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(dft(&[]).is_err());
        assert!(idft(&Spectrum { bins: vec![] }).is_err());
    }

    #[test]
    fn fast_transform_matches_definition_for_odd_factors() {
        for n in [6usize, 10, 30, 98, 126] {
            let x: Vec<Complex64> =
                (0..n).map(|j| Complex64::new((j as f64 * 0.37).sin(), (j as f64 * 1.3).cos())).collect();
            let fast = dft(&x).unwrap();
            let slow = naive_dft(&x);
            let scale: f64 = slow.iter().map(|v| v.norm()).fold(0.0, f64::max);
            for (a, b) in fast.bins.iter().zip(&slow) {
                assert!((a - b).norm() <= 1e-12 * scale * n as f64);
            }
        }
    }

    #[test]
    fn morlet_peak_value() {
        let p = WaveletParams::new(1.0, 6.0);
        let v = morlet_spectrum(&p, 1.0, &[6.0]);
        assert!((v[0] - 1.882_792_3).abs() < 1e-6, "{}", v[0]);
        assert!((v[0] - (4.0 * PI).powf(0.25)).abs() < 1e-15);

        let p = WaveletParams::new(5.0, 6.0);
        let a = 0.25;
        let v = morlet_spectrum(&p, a, &[6.0 / a]);
        assert!((v[0] - p.peak()).abs() < 1e-15);
    }

    #[test]
    fn morlet_is_symmetric_about_peak() {
        let p = WaveletParams::new(2.5, 6.0);
        for d in [0.01, 0.3, 1.7] {
            let v = morlet_spectrum(&p, 1.0, &[6.0 + d, 6.0 - d]);
            assert!((v[0] - v[1]).abs() <= 1e-15 * v[0].max(1e-300));
        }
    }

    #[test]
    fn derivative_sign_and_zero() {
        let p = WaveletParams::new(3.0, 6.0);
        let a = 0.5;
        let d = morlet_spectrum_derivative(&p, a, &[12.0, 11.0, 13.0]);
        assert_eq!(d[0], 0.0);
        assert!(d[1] > 0.0);
        assert!(d[2] < 0.0);
    }

    #[test]
    fn printed_derivative_is_sigma_cubed_multiple() {
        let analytic = WaveletParams::new(2.0, 6.0);
        let printed = analytic.with_derivative(DerivativeForm::Printed);
        let w = [10.0, 14.0];
        let da = morlet_spectrum_derivative(&analytic, 0.5, &w);
        let dp = morlet_spectrum_derivative(&printed, 0.5, &w);
        for (x, y) in da.iter().zip(&dp) {
            assert!((y - 8.0 * x).abs() <= 1e-12 * y.abs());
        }
    }

    #[test]
    fn admissibility() {
        assert!(WaveletParams::new(1.0, 6.0).validate().is_ok());
        assert!(WaveletParams::new(5.0, 6.0).validate().is_ok());
        assert!(WaveletParams::new(0.5, 6.0).validate().is_err());
        assert!(WaveletParams::new(0.0, 6.0).validate().is_err());
        assert!(WaveletParams::new(1.0, -6.0).validate().is_err());
    }
}
