use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ntewt_core::ntewt::Accumulation;
use ntewt_core::scenario::{DEFAULT_OMEGA_PSI, DEFAULT_SAMPLE_RATE};
use ntewt_core::{ChirpSpec, DerivativeForm, HarmonicSpec, MetricMode, Preset, Result, ScenarioConfig};

#[derive(Debug, Parser)]
#[command(name = "ntewt", version, about = "Newton time-extracting wavelet chirp filter")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic test signal.
    Synth {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Write the scalogram, the NTe representation and the fixed-point
    /// metric as matrices.
    Analyze {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        input: InputArgs,
        /// Directory receiving cwt.*, ntewt.* and fixedpoint.*.
        #[arg(long)]
        out_dir: PathBuf,
        /// Repeat the analysis for each wavelet width, one subdirectory per
        /// value.
        #[arg(long, value_delimiter = ',')]
        sigma_sweep: Vec<f64>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Filter a signal and write the result.
    Filter {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        input: InputArgs,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Run the matched filter against a template.
    Match {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        input: InputArgs,
        /// Template signal file. Defaults to one pulse of the scenario's
        /// first chirp.
        #[arg(long)]
        template: Option<PathBuf>,
        /// Detection record (key=value). Printed to stdout when omitted.
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Full response as `lag,response` CSV.
        #[arg(long)]
        response: Option<PathBuf>,
        /// Also filter the input and report the peak-to-sidelobe gain.
        #[arg(long)]
        gain: bool,
    },
    /// Time the filter over a range of signal lengths.
    Bench {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value_t = 4)]
        min_n: usize,
        #[arg(long, default_value_t = 1024)]
        max_n: usize,
        #[arg(long, default_value_t = 2)]
        step: usize,
        #[arg(long, default_value_t = 50)]
        reps: usize,
        #[arg(long, default_value_t = 3)]
        warmup: usize,
        /// Also time the transform without synthesis.
        #[arg(long)]
        transform: bool,
        #[arg(short, long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Bin,
    Pgm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    Modulus,
    Real,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Signal file (CSV or binary). When omitted the scenario is
    /// synthesised.
    #[arg(short, long)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    #[arg(long)]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Sample rate in Hz; also applied to CSV inputs.
    #[arg(long)]
    pub fs: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub omega_psi: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub noise_std: Option<f64>,
    /// `f_low:f_high:len:offset[:amplitude]`; replaces the preset chirps.
    #[arg(long, value_parser = parse_chirp)]
    pub chirp: Vec<ChirpSpec>,
    /// `freq[:amplitude]`; replaces the preset harmonics.
    #[arg(long, value_parser = parse_harmonic)]
    pub harmonic: Vec<HarmonicSpec>,
    /// Use the wavelet derivative with the σ⁵ factor.
    #[arg(long)]
    pub paper_derivative: bool,
    /// Accumulate unrenormalised W coefficients in the filter.
    #[arg(long)]
    pub paper_accumulation: bool,
    #[arg(long, value_enum, default_value_t = Metric::Modulus)]
    pub metric: Metric,
    /// Use all cores instead of one thread.
    #[arg(long)]
    pub parallel: bool,
}

impl ScenarioArgs {
    pub fn resolve(&self) -> Result<ScenarioConfig> {
        let mut s = match self.preset {
            Some(p) => ScenarioConfig::preset(p),
            None => ScenarioConfig::custom(self.n.unwrap_or(1024)),
        };
        if let Some(n) = self.n {
            s.n = n;
        }
        s.sample_rate = self.fs.unwrap_or(DEFAULT_SAMPLE_RATE);
        if let Some(sigma) = self.sigma {
            s.params.sigma = sigma;
        }
        s.params.omega_psi = self.omega_psi.unwrap_or(DEFAULT_OMEGA_PSI);
        if self.paper_derivative {
            s.params = s.params.with_derivative(DerivativeForm::Printed);
        }
        if let Some(eps) = self.epsilon {
            s.cfg.epsilon = eps;
        }
        if self.paper_accumulation {
            s.cfg.accumulation = Accumulation::Printed;
        }
        s.cfg.metric = match self.metric {
            Metric::Modulus => MetricMode::Modulus,
            Metric::Real => MetricMode::RealPart,
        };
        if !self.chirp.is_empty() {
            s.chirps = self.chirp.clone();
        }
        if !self.harmonic.is_empty() {
            s.harmonics = self.harmonic.clone();
        }
        let std_dev = self.noise_std.unwrap_or(s.noise.std_dev);
        s = s.with_noise(std_dev, self.seed);
        s.params.validate()?;
        s.cfg.validate()?;
        Ok(s)
    }
}

fn numbers(s: &str, min: usize, max: usize) -> std::result::Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() < min || parts.len() > max {
        return Err(format!("expected {min} to {max} ':'-separated fields, got {}", parts.len()));
    }
    parts.iter().map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}"))).collect()
}

fn count(v: f64, what: &str) -> std::result::Result<usize, String> {
    if v >= 0.0 && v.fract() == 0.0 {
        Ok(v as usize)
    } else {
        Err(format!("{what} must be a non-negative integer, got {v}"))
    }
}

fn parse_chirp(s: &str) -> std::result::Result<ChirpSpec, String> {
    let v = numbers(s, 4, 5)?;
    let mut spec = ChirpSpec::new(v[0], v[1], count(v[2], "pulse length")?, count(v[3], "offset")?);
    if let Some(&amp) = v.get(4) {
        spec.amplitude = amp;
    }
    Ok(spec)
}

fn parse_harmonic(s: &str) -> std::result::Result<HarmonicSpec, String> {
    let v = numbers(s, 1, 2)?;
    let mut spec = HarmonicSpec::new(v[0]);
    if let Some(&amp) = v.get(1) {
        spec.amplitude = amp;
    }
    Ok(spec)
}
