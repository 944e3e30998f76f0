mod args;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;

use ntewt_core::bench::{even_lengths, run_speed_sweep, with_threads, SweepOptions};
use ntewt_core::io::{
    read_samples_auto, read_signal_auto, write_bench_csv, write_detection_record, write_matrix_csv, write_pgm,
    write_response_csv, write_scalogram_csv, write_signal_bin, write_signal_csv, write_tfr,
};
use ntewt_core::ntewt::{export_fixed_point_log, LOG_METRIC_CAP};
use ntewt_core::signal::NOISE_RNG_ID;
use ntewt_core::{analyze, detection_gain, matched_filter, Error, NtewtFilter, Result, ScenarioConfig, Signal, Tfr};

use args::{Cli, Command, Format, InputArgs, ScenarioArgs};

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parameter(_) | Error::Usage(_) => 2,
        Error::Io(_) => 3,
        Error::Parse { .. } => 4,
        Error::Degenerate(_) => 5,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ntewt: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(command: Command) -> Result<()> {
    let parallel = match &command {
        Command::Synth { scenario, .. }
        | Command::Analyze { scenario, .. }
        | Command::Filter { scenario, .. }
        | Command::Match { scenario, .. }
        | Command::Bench { scenario, .. } => scenario.parallel,
    };
    match command {
        Command::Synth { scenario, out, format } => synth(&scenario, &out, format),
        Command::Analyze { scenario, input, out_dir, sigma_sweep, format } => {
            with_threads(parallel, || analyze_cmd(&scenario, &input, &out_dir, &sigma_sweep, format))?
        }
        Command::Filter { scenario, input, out, format } => {
            with_threads(parallel, || filter_cmd(&scenario, &input, &out, format))?
        }
        Command::Match { scenario, input, template, out, response, gain } => with_threads(parallel, || {
            match_cmd(&scenario, &input, template.as_deref(), out.as_deref(), response.as_deref(), gain)
        })?,
        Command::Bench { scenario, min_n, max_n, step, reps, warmup, transform, out } => {
            let s = scenario.resolve()?;
            let opts =
                SweepOptions { repetitions: reps, warmup, seed: scenario.seed, parallel, time_transform: transform };
            let lengths = even_lengths(min_n, max_n, step);
            if lengths.is_empty() {
                return Err(Error::Parameter(format!("no even lengths in [{min_n}, {max_n}]")));
            }
            let records = run_speed_sweep(&lengths, &s.params, &s.cfg, &opts)?;
            write_bench_csv(create(&out)?, &records)
        }
    }
}

fn with_path(path: &Path) -> impl FnOnce(io::Error) -> Error + '_ {
    move |e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(with_path(path))?))
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(with_path(path))
}

fn write_signal(path: &Path, x: &Signal, format: Format) -> Result<()> {
    match format {
        Format::Csv => write_signal_csv(create(path)?, x),
        Format::Bin => write_signal_bin(create(path)?, x),
        Format::Pgm => Err(Error::Usage("signals are written as csv or bin".into())),
    }
}

/// The input file if one was given, otherwise the synthesised scenario.
fn load(scenario: &ScenarioConfig, input: &InputArgs) -> Result<Signal> {
    match &input.input {
        Some(path) => read_signal_auto(&read(path)?, scenario.sample_rate),
        None => scenario.signal(),
    }
}

fn synth(args: &ScenarioArgs, out: &Path, format: Format) -> Result<()> {
    let s = args.resolve()?;
    let x = s.signal()?;
    write_signal(out, &x, format)?;
    let mut meta = create(&sidecar(out))?;
    writeln!(meta, "scenario={}", s.name)?;
    writeln!(meta, "n={}", x.len())?;
    writeln!(meta, "sample_rate_hz={}", x.sample_rate())?;
    writeln!(meta, "noise_std={}", s.noise.std_dev)?;
    writeln!(meta, "noise_seed={}", s.noise.seed)?;
    writeln!(meta, "noise_rng={NOISE_RNG_ID}")?;
    meta.flush()?;
    Ok(())
}

/// `signal.csv` → `signal.csv.meta`.
fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".meta");
    PathBuf::from(name)
}

fn analyze_cmd(args: &ScenarioArgs, input: &InputArgs, out_dir: &Path, sweep: &[f64], format: Format) -> Result<()> {
    let base = args.resolve()?;
    let x = load(&base, input)?;
    fs::create_dir_all(out_dir).map_err(with_path(out_dir))?;
    if sweep.is_empty() {
        return analyze_one(&x, &base, out_dir, format);
    }
    for &sigma in sweep {
        let mut s = base.clone();
        s.params.sigma = sigma;
        let dir = out_dir.join(format!("sigma-{sigma}"));
        fs::create_dir_all(&dir).map_err(with_path(&dir))?;
        analyze_one(&x, &s, &dir, format)?;
    }
    Ok(())
}

fn analyze_one(x: &Signal, s: &ScenarioConfig, dir: &Path, format: Format) -> Result<()> {
    let a = analyze(x, &s.params, &s.cfg)?;
    let log_metric = export_fixed_point_log(&a.field, LOG_METRIC_CAP);
    write_matrix_csv(create(&dir.join("fixedpoint.csv"))?, a.w.grid(), &log_metric)?;
    let tfrs: [(&str, &Tfr); 2] = [("cwt", &a.w), ("ntewt", &a.nte)];
    for (name, tfr) in tfrs {
        match format {
            Format::Bin => write_tfr(create(&dir.join(format!("{name}.tfr")))?, tfr)?,
            Format::Csv | Format::Pgm => write_scalogram_csv(create(&dir.join(format!("{name}.csv")))?, tfr)?,
        }
        if format == Format::Pgm {
            write_pgm(create(&dir.join(format!("{name}.pgm")))?, &tfr.magnitude())?;
        }
    }
    if format == Format::Pgm {
        write_pgm(create(&dir.join("fixedpoint.pgm"))?, &log_metric)?;
    }
    Ok(())
}

fn filter_cmd(args: &ScenarioArgs, input: &InputArgs, out: &Path, format: Format) -> Result<()> {
    let s = args.resolve()?;
    let x = load(&s, input)?;
    let result = NtewtFilter::new(s.params, s.cfg).run(&x)?;
    write_signal(out, &result.filtered, format)?;
    let mut stdout = io::stdout().lock();
    writeln!(stdout, "n={}", x.len())?;
    writeln!(stdout, "surviving_points={}", result.stats.total_surviving())?;
    writeln!(stdout, "runtime_s={}", result.stats.runtime.as_secs_f64())?;
    Ok(())
}

fn match_cmd(
    args: &ScenarioArgs,
    input: &InputArgs,
    template: Option<&Path>,
    out: Option<&Path>,
    response: Option<&Path>,
    gain: bool,
) -> Result<()> {
    let s = args.resolve()?;
    let x = load(&s, input)?;
    let tpl = match template {
        Some(path) => read_samples_auto(&read(path)?)?,
        None => s.template()?,
    };
    let report = matched_filter(x.samples(), &tpl)?;
    match out {
        Some(path) => write_detection_record(create(path)?, &report)?,
        None => write_detection_record(io::stdout().lock(), &report)?,
    }
    if let Some(path) = response {
        write_response_csv(create(path)?, &report)?;
    }
    if gain {
        let filtered = NtewtFilter::new(s.params, s.cfg).run(&x)?.filtered;
        let after = matched_filter(filtered.samples(), &tpl)?;
        let g = detection_gain(&report, &after)?;
        writeln!(io::stdout().lock(), "gain_db={g}")?;
    }
    if report.peak_to_sidelobe_db.is_none() {
        return Err(Error::Degenerate("matched-filter response is identically zero".into()));
    }
    Ok(())
}
