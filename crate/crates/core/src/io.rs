//! File formats.
//!
//! * Signal CSV: one decimal sample per line.
//! * Signal binary: `NTESIG01`, `u32` n, `f64` sample rate, n `f64` samples.
//! * TFR binary: `NTETFR01`, `u32` n, `u32` rows, `u8` kind tag, then the
//!   coefficients row by row (scale-major) as `f64` (re, im) pairs.
//! * Scalogram / fixed-point CSV: a `#`-prefixed header listing each row's
//!   centre frequency in Hz, then one line per scale row in ascending
//!   frequency order, `n` comma-separated values per line.
//!
//! * Speed sweep CSV: `n,mean_runtime_s,max_realtime_fs_hz` with a header.
//!
//! All binary fields are little-endian.

use std::io::{BufRead, Read, Write};

use ndarray::Array2;
use num_complex::Complex64;

use crate::bench::BenchRecord;
use crate::cwt::{ScaleGrid, Tfr, TfrKind};
use crate::detect::DetectionReport;
use crate::error::{Error, Result};
use crate::signal::Signal;

pub const SIGNAL_MAGIC: &[u8; 8] = b"NTESIG01";
pub const TFR_MAGIC: &[u8; 8] = b"NTETFR01";

pub fn write_signal_csv<W: Write>(mut w: W, x: &Signal) -> Result<()> {
    for v in x.samples() {
        writeln!(w, "{v}")?;
    }
    w.flush()?;
    Ok(())
}

/// Blank lines are skipped; anything else must parse as a number.
pub fn read_signal_csv<R: BufRead>(r: R, sample_rate: f64) -> Result<Signal> {
    Signal::new(read_samples_csv(r)?, sample_rate)
}

/// Samples of a signal CSV without the length checks of [`Signal`], for
/// templates of any length.
pub fn read_samples_csv<R: BufRead>(r: R) -> Result<Vec<f64>> {
    let mut samples = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let v: f64 =
            text.parse().map_err(|_| Error::Parse { line: i + 1, message: format!("not a number: {text:?}") })?;
        if !v.is_finite() {
            return Err(Error::Parse { line: i + 1, message: "sample is not finite".into() });
        }
        samples.push(v);
    }
    Ok(samples)
}

pub fn write_signal_bin<W: Write>(mut w: W, x: &Signal) -> Result<()> {
    let n = u32::try_from(x.len()).map_err(|_| Error::param("signal too long for u32 length"))?;
    w.write_all(SIGNAL_MAGIC)?;
    w.write_all(&n.to_le_bytes())?;
    w.write_all(&x.sample_rate().to_le_bytes())?;
    for v in x.samples() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_array<const N: usize, R: Read>(r: &mut R, what: &str) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => {
            Error::Parse { line: 0, message: format!("truncated file while reading {what}") }
        }
        _ => Error::Io(e),
    })?;
    Ok(buf)
}

pub fn read_signal_bin<R: Read>(r: R) -> Result<Signal> {
    let (samples, fs) = read_samples_bin(r)?;
    Signal::new(samples, fs)
}

/// Samples and sample rate of a binary signal file, without the length
/// checks of [`Signal`].
pub fn read_samples_bin<R: Read>(mut r: R) -> Result<(Vec<f64>, f64)> {
    let magic: [u8; 8] = read_array(&mut r, "magic")?;
    if &magic != SIGNAL_MAGIC {
        return Err(Error::Parse { line: 0, message: "bad magic, expected NTESIG01".into() });
    }
    let n = u32::from_le_bytes(read_array(&mut r, "length")?) as usize;
    let fs = f64::from_le_bytes(read_array(&mut r, "sample rate")?);
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        samples.push(f64::from_le_bytes(read_array(&mut r, "sample")?));
    }
    Ok((samples, fs))
}

/// Reads either format, choosing binary when the magic is present.
pub fn read_signal_auto(bytes: &[u8], sample_rate: f64) -> Result<Signal> {
    if bytes.starts_with(SIGNAL_MAGIC) {
        read_signal_bin(bytes)
    } else {
        read_signal_csv(bytes, sample_rate)
    }
}

/// Raw samples from either format.
pub fn read_samples_auto(bytes: &[u8]) -> Result<Vec<f64>> {
    if bytes.starts_with(SIGNAL_MAGIC) {
        Ok(read_samples_bin(bytes)?.0)
    } else {
        read_samples_csv(bytes)
    }
}

pub fn write_tfr<W: Write>(mut w: W, tfr: &Tfr) -> Result<()> {
    w.write_all(TFR_MAGIC)?;
    w.write_all(&(tfr.n() as u32).to_le_bytes())?;
    w.write_all(&(tfr.rows() as u32).to_le_bytes())?;
    w.write_all(&[tfr.kind().tag()])?;
    for c in tfr.coeffs().iter() {
        w.write_all(&c.re.to_le_bytes())?;
        w.write_all(&c.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// The binary layout carries no axes; they are rebuilt from `sample_rate`
/// and `omega_psi`.
pub fn read_tfr<R: Read>(mut r: R, sample_rate: f64, omega_psi: f64) -> Result<Tfr> {
    let magic: [u8; 8] = read_array(&mut r, "magic")?;
    if &magic != TFR_MAGIC {
        return Err(Error::Parse { line: 0, message: "bad magic, expected NTETFR01".into() });
    }
    let n = u32::from_le_bytes(read_array(&mut r, "n")?) as usize;
    let rows = u32::from_le_bytes(read_array(&mut r, "rows")?) as usize;
    let [tag] = read_array::<1, _>(&mut r, "kind")?;
    let kind = TfrKind::from_tag(tag)
        .ok_or_else(|| Error::Parse { line: 0, message: format!("unknown TFR kind tag {tag}") })?;
    if rows != n / 2 {
        return Err(Error::Parse { line: 0, message: format!("{rows} rows is inconsistent with n = {n}") });
    }
    let mut coeffs = Vec::with_capacity(n * rows);
    for _ in 0..n * rows {
        let re = f64::from_le_bytes(read_array(&mut r, "coefficient")?);
        let im = f64::from_le_bytes(read_array(&mut r, "coefficient")?);
        coeffs.push(Complex64::new(re, im));
    }
    let grid = ScaleGrid::new(n, sample_rate, omega_psi)?;
    let coeffs = Array2::from_shape_vec((rows, n), coeffs).map_err(|e| Error::param(e.to_string()))?;
    Tfr::new(coeffs, kind, grid)
}

/// Writes a `[rows, n]` real matrix in the scalogram CSV layout.
pub fn write_matrix_csv<W: Write>(mut w: W, grid: &ScaleGrid, values: &Array2<f64>) -> Result<()> {
    if values.dim() != (grid.rows(), grid.n()) {
        return Err(Error::param("matrix does not match the grid"));
    }
    let header: Vec<String> = grid.center_freq_hz.iter().map(|f| f.to_string()).collect();
    writeln!(w, "# center_freq_hz,{}", header.join(","))?;
    for row in values.rows() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_scalogram_csv<W: Write>(w: W, tfr: &Tfr) -> Result<()> {
    write_matrix_csv(w, tfr.grid(), &tfr.magnitude())
}

/// Reads back a matrix written by [`write_matrix_csv`]: (centre frequencies,
/// values).
pub fn read_matrix_csv<R: BufRead>(r: R) -> Result<(Vec<f64>, Array2<f64>)> {
    let mut freqs = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let parse = |s: &str| {
            s.trim().parse::<f64>().map_err(|_| Error::Parse { line: i + 1, message: format!("not a number: {s:?}") })
        };
        if let Some(rest) = line.strip_prefix("# center_freq_hz,") {
            freqs = Some(rest.split(',').map(parse).collect::<Result<Vec<_>>>()?);
        } else if !line.trim().is_empty() {
            rows.push(line.split(',').map(parse).collect::<Result<Vec<_>>>()?);
        }
    }
    let freqs = freqs.ok_or_else(|| Error::Parse { line: 1, message: "missing centre-frequency header".into() })?;
    let width = rows.first().map_or(0, Vec::len);
    if rows.len() != freqs.len() || rows.iter().any(|r| r.len() != width) {
        return Err(Error::Parse { line: 0, message: "ragged matrix or row count differs from header".into() });
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let m = Array2::from_shape_vec((freqs.len(), width), flat).map_err(|e| Error::param(e.to_string()))?;
    Ok((freqs, m))
}

/// 8-bit binary PGM, highest frequency on the top line, linear grey scale
/// between the matrix minimum (black) and maximum (white).
pub fn write_pgm<W: Write>(mut w: W, values: &Array2<f64>) -> Result<()> {
    let (rows, cols) = values.dim();
    let finite = values.iter().copied().filter(|v| v.is_finite());
    let lo = finite.clone().fold(f64::INFINITY, f64::min);
    let hi = finite.fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    write!(w, "P5\n{cols} {rows}\n255\n")?;
    for k in (0..rows).rev() {
        let line: Vec<u8> = values
            .row(k)
            .iter()
            .map(|&v| if v.is_finite() { (((v - lo) / span) * 255.0).round().clamp(0.0, 255.0) as u8 } else { 255 })
            .collect();
        w.write_all(&line)?;
    }
    w.flush()?;
    Ok(())
}

/// `key=value` summary of a detection report.
pub fn write_detection_record<W: Write>(mut w: W, report: &DetectionReport) -> Result<()> {
    writeln!(w, "template_len={}", report.template_len)?;
    writeln!(w, "peak_index={}", report.peak_index)?;
    writeln!(w, "peak_lag={}", report.peak_lag())?;
    writeln!(w, "peak_value={}", report.peak_value)?;
    match report.peak_to_sidelobe_db {
        Some(v) => writeln!(w, "peak_to_sidelobe_db={v}")?,
        None => writeln!(w, "peak_to_sidelobe_db=undefined")?,
    }
    w.flush()?;
    Ok(())
}

/// `lag,response` lines with a header.
pub fn write_response_csv<W: Write>(mut w: W, report: &DetectionReport) -> Result<()> {
    writeln!(w, "lag,response")?;
    for (i, v) in report.response.iter().enumerate() {
        writeln!(w, "{},{v}", report.lag_of(i))?;
    }
    w.flush()?;
    Ok(())
}

/// Speed-sweep table: `n,mean_runtime_s,max_realtime_fs_hz`, plus
/// `transform_runtime_s` when every record carries it.
pub fn write_bench_csv<W: Write>(mut w: W, records: &[BenchRecord]) -> Result<()> {
    let with_transform = !records.is_empty() && records.iter().all(|r| r.transform_runtime_s.is_some());
    write!(w, "n,mean_runtime_s,max_realtime_fs_hz")?;
    if with_transform {
        write!(w, ",transform_runtime_s")?;
    }
    writeln!(w)?;
    for r in records {
        write!(w, "{},{},{}", r.n, r.mean_runtime_s, r.max_realtime_fs_hz)?;
        if let (true, Some(t)) = (with_transform, r.transform_runtime_s) {
            write!(w, ",{t}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}
