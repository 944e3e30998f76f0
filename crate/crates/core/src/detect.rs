//! Matched-filter detection and peak-to-sidelobe scoring.

use crate::error::{Error, Result};

/// Output of a linear matched filter.
///
/// `response[i]` is the correlation at lag `i - (template_len - 1)`, i.e.
/// the template placed so that its first sample lines up with `x[lag]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionReport {
    pub response: Vec<f64>,
    pub template_len: usize,
    /// Index into `response` of the largest `|response|`.
    pub peak_index: usize,
    pub peak_value: f64,
    /// `None` when the response is identically zero. `+∞` when no
    /// response sample lies outside the exclusion window or every such
    /// sample is zero.
    pub peak_to_sidelobe_db: Option<f64>,
}

impl DetectionReport {
    /// Lag of the peak in samples.
    pub fn peak_lag(&self) -> isize {
        self.peak_index as isize - (self.template_len as isize - 1)
    }

    pub fn lag_of(&self, index: usize) -> isize {
        index as isize - (self.template_len as isize - 1)
    }

    /// Largest `|response|` more than `template_len` samples from the peak.
    pub fn sidelobe_value(&self) -> f64 {
        sidelobe(&self.response, self.peak_index, self.template_len)
    }
}

fn sidelobe(response: &[f64], peak: usize, window: usize) -> f64 {
    response.iter().enumerate().filter(|(i, _)| i.abs_diff(peak) > window).map(|(_, v)| v.abs()).fold(0.0, f64::max)
}

/// Full linear cross-correlation of `x` with `template`.
pub fn cross_correlate(x: &[f64], template: &[f64]) -> Vec<f64> {
    let m = template.len();
    let n = x.len();
    if m == 0 || n == 0 {
        return Vec::new();
    }
    (0..n + m - 1)
        .map(|i| {
            let lag = i as isize - (m as isize - 1);
            let lo = (-lag).max(0) as usize;
            let hi = m.min((n as isize - lag) as usize);
            (lo..hi).map(|t| template[t] * x[(lag + t as isize) as usize]).sum()
        })
        .collect()
}

pub fn matched_filter(x: &[f64], template: &[f64]) -> Result<DetectionReport> {
    if template.is_empty() {
        return Err(Error::param("matched filter template is empty"));
    }
    if template.len() > x.len() {
        return Err(Error::param(format!("template ({}) longer than signal ({})", template.len(), x.len())));
    }
    let response = cross_correlate(x, template);
    let (peak_index, peak_value) =
        response.iter().enumerate().fold(
            (0, 0.0f64),
            |(bi, bv), (i, v)| {
                if v.abs() > bv {
                    (i, v.abs())
                } else {
                    (bi, bv)
                }
            },
        );
    let peak_to_sidelobe_db = if peak_value == 0.0 {
        None
    } else {
        let side = sidelobe(&response, peak_index, template.len());
        Some(if side == 0.0 { f64::INFINITY } else { 20.0 * (peak_value / side).log10() })
    };
    Ok(DetectionReport { response, template_len: template.len(), peak_index, peak_value, peak_to_sidelobe_db })
}

/// Improvement in peak-to-sidelobe ratio, in dB, of `filtered` over `raw`.
pub fn detection_gain(raw: &DetectionReport, filtered: &DetectionReport) -> Result<f64> {
    if raw.template_len != filtered.template_len {
        return Err(Error::Usage("reports come from different templates".into()));
    }
    let (Some(f), Some(r)) = (filtered.peak_to_sidelobe_db, raw.peak_to_sidelobe_db) else {
        return Err(Error::Degenerate("matched-filter response is identically zero".into()));
    };
    let gain = f - r;
    if gain.is_nan() {
        return Err(Error::Degenerate("both responses have no sidelobes".into()));
    }
    Ok(gain)
}
