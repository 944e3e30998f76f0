//! Preset synthetic experiments.
//!
//! All presets sample at 180 kHz and use a Morlet centre frequency of
//! 6 rad/s. Pulse placement inside the record is not fixed by the
//! experiment descriptions; single pulses are centred.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ntewt::NtewtConfig;
use crate::signal::{synth_chirp, synth_composite, ChirpSpec, HarmonicSpec, NoiseSpec, Signal};
use crate::spectral::WaveletParams;

pub const DEFAULT_SAMPLE_RATE: f64 = 180e3;
pub const DEFAULT_OMEGA_PSI: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// 1024 samples, one 512-sample 0→90 kHz chirp, harmonics at 30/60 kHz.
    Test1,
    /// 1024 samples, one 32-sample 0→90 kHz chirp, harmonics at 30/60 kHz.
    Test2,
    /// 128 samples, one 32-sample 0→90 kHz chirp, harmonics at 30/60 kHz.
    Test3,
    /// 128 samples, four back-to-back 32-sample 30→60 kHz chirps.
    Test4,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Test1, Preset::Test2, Preset::Test3, Preset::Test4];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Test1 => "test1",
            Preset::Test2 => "test2",
            Preset::Test3 => "test3",
            Preset::Test4 => "test4",
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "test1" => Ok(Preset::Test1),
            "test2" => Ok(Preset::Test2),
            "test3" => Ok(Preset::Test3),
            "test4" => Ok(Preset::Test4),
            other => Err(Error::param(format!("unknown preset {other:?}"))),
        }
    }
}

/// A complete experiment description; every field may be overridden.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub n: usize,
    pub sample_rate: f64,
    pub chirps: Vec<ChirpSpec>,
    pub harmonics: Vec<HarmonicSpec>,
    pub noise: NoiseSpec,
    pub params: WaveletParams,
    pub cfg: NtewtConfig,
}

impl ScenarioConfig {
    pub fn preset(preset: Preset) -> Self {
        let harmonics = vec![HarmonicSpec::new(30e3), HarmonicSpec::new(60e3)];
        let (n, chirps, harmonics, sigma, epsilon) = match preset {
            Preset::Test1 => (1024, vec![ChirpSpec::new(0.0, 90e3, 512, 256)], harmonics, 5.0, 1e-3),
            Preset::Test2 => (1024, vec![ChirpSpec::new(0.0, 90e3, 32, 496)], harmonics, 5.0, 2e-3),
            Preset::Test3 => (128, vec![ChirpSpec::new(0.0, 90e3, 32, 48)], harmonics, 3.0, 1e-2),
            Preset::Test4 => {
                (128, (0..4).map(|i| ChirpSpec::new(30e3, 60e3, 32, 32 * i)).collect(), Vec::new(), 3.0, 1e-2)
            }
        };
        Self {
            name: preset.name().to_string(),
            n,
            sample_rate: DEFAULT_SAMPLE_RATE,
            chirps,
            harmonics,
            noise: NoiseSpec::none(),
            params: WaveletParams::new(sigma, DEFAULT_OMEGA_PSI),
            cfg: NtewtConfig::with_epsilon(epsilon),
        }
    }

    /// An empty scenario of `n` samples.
    pub fn custom(n: usize) -> Self {
        Self {
            name: "custom".to_string(),
            n,
            sample_rate: DEFAULT_SAMPLE_RATE,
            chirps: Vec::new(),
            harmonics: Vec::new(),
            noise: NoiseSpec::none(),
            params: WaveletParams::new(5.0, DEFAULT_OMEGA_PSI),
            cfg: NtewtConfig::default(),
        }
    }

    pub fn with_noise(mut self, std_dev: f64, seed: u64) -> Self {
        self.noise = NoiseSpec::new(std_dev, seed);
        self
    }

    pub fn signal(&self) -> Result<Signal> {
        synth_composite(&self.chirps, &self.harmonics, &self.noise, self.n, self.sample_rate)
    }

    /// The chirp content alone, without harmonics or noise.
    pub fn clean_chirps(&self) -> Result<Signal> {
        synth_composite(&self.chirps, &[], &NoiseSpec::none(), self.n, self.sample_rate)
    }

    /// Harmonics alone.
    pub fn harmonics_only(&self) -> Result<Signal> {
        synth_composite(&[], &self.harmonics, &NoiseSpec::none(), self.n, self.sample_rate)
    }

    /// One pulse of the first chirp, `pulse_len` samples long, for matched
    /// filtering.
    pub fn template(&self) -> Result<Vec<f64>> {
        let first =
            self.chirps.first().ok_or_else(|| Error::param("scenario has no chirp to build a template from"))?;
        let pulse = ChirpSpec { start_offset: 0, ..*first };
        let len = pulse.pulse_len + pulse.pulse_len % 2;
        let full = synth_chirp(&pulse, len.max(2), self.sample_rate)?;
        Ok(full.samples()[..pulse.pulse_len].to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_match_experiment_tables() {
        let t1 = ScenarioConfig::preset(Preset::Test1);
        assert_eq!(t1.n, 1024);
        assert_eq!(t1.sample_rate, 180e3);
        assert_eq!(t1.chirps[0].pulse_len, 512);
        assert_eq!((t1.chirps[0].f_low, t1.chirps[0].f_high), (0.0, 90e3));
        assert_eq!(t1.harmonics.iter().map(|h| h.freq).collect::<Vec<_>>(), vec![30e3, 60e3]);
        assert_eq!(t1.noise.std_dev, 0.0);
        assert_eq!(t1.params.sigma, 5.0);
        assert_eq!(t1.cfg.epsilon, 1e-3);

        let t2 = ScenarioConfig::preset(Preset::Test2);
        assert_eq!((t2.n, t2.chirps[0].pulse_len, t2.cfg.epsilon), (1024, 32, 2e-3));

        let t3 = ScenarioConfig::preset(Preset::Test3);
        assert_eq!((t3.n, t3.params.sigma, t3.cfg.epsilon), (128, 3.0, 1e-2));

        let t4 = ScenarioConfig::preset(Preset::Test4);
        assert_eq!(t4.n, 128);
        assert_eq!(t4.chirps.len(), 4);
        assert!(t4.harmonics.is_empty());
        for (i, c) in t4.chirps.iter().enumerate() {
            assert_eq!(c.start_offset, 32 * i);
            assert_eq!((c.f_low, c.f_high, c.pulse_len), (30e3, 60e3, 32));
        }
        for p in Preset::ALL {
            let s = ScenarioConfig::preset(p);
            assert_eq!(s.params.omega_psi, 6.0);
            assert!(s.signal().is_ok());
        }
    }

    #[test]
    fn preset_names_round_trip() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert!("test5".parse::<Preset>().is_err());
    }

    #[test]
    fn train_is_four_copies_of_template() {
        let t4 = ScenarioConfig::preset(Preset::Test4);
        let x = t4.signal().unwrap();
        let tpl = t4.template().unwrap();
        for i in 0..4 {
            assert_eq!(&x.samples()[32 * i..32 * (i + 1)], &tpl[..]);
        }
    }
}
