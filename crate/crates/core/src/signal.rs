//! Discrete test signals: linear chirp pulses, stationary harmonics and
//! seeded Gaussian noise.
//!
//! Every sample is evaluated from its closed form, so synthesis is exactly
//! reproducible and composites are the elementwise sum of their parts.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Identifier of the noise generator, written next to synthesized files.
pub const NOISE_RNG_ID: &str = "chacha20/normal-ziggurat";

/// A real-valued, uniformly sampled signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<f64>,
    sample_rate: f64,
}

impl Signal {
    /// Wraps `samples`; the length must be even and at least 2.
    pub fn new(samples: Vec<f64>, sample_rate: f64) -> Result<Self> {
        let n = samples.len();
        if n < 2 || !n.is_multiple_of(2) {
            return Err(Error::param(format!("signal length must be even and >= 2, got {n}")));
        }
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::param(format!("sample rate must be positive, got {sample_rate}")));
        }
        if let Some(j) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::param(format!("sample {j} is not finite")));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn zeros(n: usize, sample_rate: f64) -> Result<Self> {
        Self::new(vec![0.0; n], sample_rate)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|v| v * v).sum()
    }

    /// Returns a copy with every sample multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self { samples: self.samples.iter().map(|v| v * factor).collect(), sample_rate: self.sample_rate }
    }

    /// Elementwise sum. Both signals must share length and rate.
    pub fn add(&self, other: &Signal) -> Result<Self> {
        if self.len() != other.len() || self.sample_rate != other.sample_rate {
            return Err(Error::param("signals differ in length or sample rate"));
        }
        let samples = self.samples.iter().zip(&other.samples).map(|(a, b)| a + b).collect();
        Ok(Self { samples, sample_rate: self.sample_rate })
    }
}

/// A linear frequency-modulated pulse with constant amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChirpSpec {
    /// Instantaneous frequency at the start of the pulse, Hz.
    pub f_low: f64,
    /// Instantaneous frequency at the end of the pulse, Hz.
    pub f_high: f64,
    /// Pulse length in samples.
    pub pulse_len: usize,
    /// Index of the first in-pulse sample.
    pub start_offset: usize,
    pub amplitude: f64,
}

impl ChirpSpec {
    pub fn new(f_low: f64, f_high: f64, pulse_len: usize, start_offset: usize) -> Self {
        Self { f_low, f_high, pulse_len, start_offset, amplitude: 1.0 }
    }

    pub fn validate(&self, n: usize, sample_rate: f64) -> Result<()> {
        let nyquist = sample_rate / 2.0;
        if self.pulse_len == 0 {
            return Err(Error::param("chirp pulse length must be >= 1"));
        }
        if self.start_offset + self.pulse_len > n {
            return Err(Error::param(format!(
                "chirp [{}, {}) does not fit in {n} samples",
                self.start_offset,
                self.start_offset + self.pulse_len
            )));
        }
        for f in [self.f_low, self.f_high] {
            if !(0.0..=nyquist).contains(&f) {
                return Err(Error::param(format!("chirp frequency {f} Hz outside [0, {nyquist}]")));
            }
        }
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return Err(Error::param("chirp amplitude must be positive"));
        }
        Ok(())
    }

    /// Pulse duration in seconds.
    pub fn duration(&self, sample_rate: f64) -> f64 {
        self.pulse_len as f64 / sample_rate
    }

    /// Instantaneous phase at `t` seconds after the pulse start.
    pub fn phase(&self, t: f64, sample_rate: f64) -> f64 {
        let duration = self.duration(sample_rate);
        2.0 * PI * t * self.f_low + PI * t * t * (self.f_high - self.f_low) / duration
    }

    /// Instantaneous frequency in Hz at `t` seconds after the pulse start.
    pub fn instantaneous_frequency(&self, t: f64, sample_rate: f64) -> f64 {
        self.f_low + (self.f_high - self.f_low) * t / self.duration(sample_rate)
    }

    /// Sample position (fractional) at which the pulse sweeps through `freq`,
    /// i.e. the inverse of the frequency law. `None` outside the sweep.
    pub fn group_delay_samples(&self, freq: f64) -> Option<f64> {
        let (lo, hi) = if self.f_low <= self.f_high { (self.f_low, self.f_high) } else { (self.f_high, self.f_low) };
        if self.f_high == self.f_low || freq < lo || freq > hi {
            return None;
        }
        let frac = (freq - self.f_low) / (self.f_high - self.f_low);
        Some(self.start_offset as f64 + frac * self.pulse_len as f64)
    }

    fn add_into(&self, out: &mut [f64], sample_rate: f64) {
        let range = self.start_offset..self.start_offset + self.pulse_len;
        for (i, v) in out[range].iter_mut().enumerate() {
            let t = i as f64 / sample_rate;
            *v += self.amplitude * self.phase(t, sample_rate).sin();
        }
    }
}

/// A stationary cosine spanning the whole signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicSpec {
    pub freq: f64,
    pub amplitude: f64,
}

impl HarmonicSpec {
    pub fn new(freq: f64) -> Self {
        Self { freq, amplitude: 1.0 }
    }

    pub fn validate(&self, sample_rate: f64) -> Result<()> {
        if !(0.0..=sample_rate / 2.0).contains(&self.freq) {
            return Err(Error::param(format!(
                "harmonic frequency {} Hz outside [0, {}]",
                self.freq,
                sample_rate / 2.0
            )));
        }
        if !self.amplitude.is_finite() {
            return Err(Error::param("harmonic amplitude must be finite"));
        }
        Ok(())
    }

    fn add_into(&self, out: &mut [f64], sample_rate: f64) {
        for (j, v) in out.iter_mut().enumerate() {
            *v += self.amplitude * (2.0 * PI * self.freq * j as f64 / sample_rate).cos();
        }
    }
}

/// White Gaussian noise drawn from a seeded generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub std_dev: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self { std_dev: 0.0, seed: 0 }
    }

    pub fn new(std_dev: f64, seed: u64) -> Self {
        Self { std_dev, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.std_dev >= 0.0 && self.std_dev.is_finite()) {
            return Err(Error::param("noise standard deviation must be >= 0"));
        }
        Ok(())
    }

    fn add_into(&self, out: &mut [f64]) {
        if self.std_dev == 0.0 {
            return;
        }
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        let normal = Normal::new(0.0, self.std_dev).expect("validated std_dev");
        for v in out.iter_mut() {
            *v += normal.sample(&mut rng);
        }
    }
}

/// Samples a single chirp pulse into an otherwise silent signal of `n` samples.
pub fn synth_chirp(spec: &ChirpSpec, n: usize, sample_rate: f64) -> Result<Signal> {
    let mut samples = Signal::zeros(n, sample_rate)?.into_samples();
    spec.validate(n, sample_rate)?;
    spec.add_into(&mut samples, sample_rate);
    Signal::new(samples, sample_rate)
}

/// Samples a harmonic over the whole signal.
pub fn synth_harmonic(spec: &HarmonicSpec, n: usize, sample_rate: f64) -> Result<Signal> {
    let mut samples = Signal::zeros(n, sample_rate)?.into_samples();
    spec.validate(sample_rate)?;
    spec.add_into(&mut samples, sample_rate);
    Signal::new(samples, sample_rate)
}

/// Chirps, then harmonics, then noise, summed sample by sample.
///
/// Noise draws happen last, one per sample in index order, so the noise
/// realisation depends only on the seed and `n`.
pub fn synth_composite(
    chirps: &[ChirpSpec],
    harmonics: &[HarmonicSpec],
    noise: &NoiseSpec,
    n: usize,
    sample_rate: f64,
) -> Result<Signal> {
    let mut samples = Signal::zeros(n, sample_rate)?.into_samples();
    for c in chirps {
        c.validate(n, sample_rate)?;
    }
    for h in harmonics {
        h.validate(sample_rate)?;
    }
    noise.validate()?;

    for c in chirps {
        c.add_into(&mut samples, sample_rate);
    }
    for h in harmonics {
        h.add_into(&mut samples, sample_rate);
    }
    noise.add_into(&mut samples);
    Signal::new(samples, sample_rate)
}

/// Signal of `n` independent standard-normal draws.
pub fn white_noise(n: usize, sample_rate: f64, seed: u64) -> Result<Signal> {
    synth_composite(&[], &[], &NoiseSpec::new(1.0, seed), n, sample_rate)
}
