//! CSV and key = value report writers. Floats carry 17 significant digits,
//! enough to reproduce every `f64` bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use survival_core::SurvivalSeries;

use crate::CliError;

pub const SERIES_HEADER: &str = "t, p00, re_psi_s, im_psi_s, re_psi_r, im_psi_r, method";
pub const COMPARISON_HEADER: &str = "t, method, p00_reference, p00, abs_diff, max_abs_diff";

/// Round-trip float formatting.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// Rows of one or more series in the fixed column schema.
pub fn series_csv(series: &[&SurvivalSeries]) -> String {
    let mut out = String::from(SERIES_HEADER);
    out.push('\n');
    for s in series {
        for i in 0..s.len() {
            let _ = writeln!(
                out,
                "{}, {}, {}, {}, {}, {}, {}",
                num(s.times[i]),
                num(s.p00[i]),
                num(s.psi_s[i].re),
                num(s.psi_s[i].im),
                num(s.psi_r[i].re),
                num(s.psi_r[i].im),
                s.method.label()
            );
        }
    }
    out
}

/// Largest `|P00 - P00_reference|` over a common grid.
pub fn max_abs_diff(reference: &SurvivalSeries, other: &SurvivalSeries) -> f64 {
    reference.p00.iter().zip(&other.p00).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// Pointwise differences of each series against `reference`, with the
/// maximum repeated on every row of a method.
pub fn comparison_csv(reference: &SurvivalSeries, others: &[&SurvivalSeries]) -> String {
    let mut out = String::from(COMPARISON_HEADER);
    out.push('\n');
    for s in others {
        let max = max_abs_diff(reference, s);
        for i in 0..s.len() {
            let _ = writeln!(
                out,
                "{}, {}, {}, {}, {}, {}",
                num(s.times[i]),
                s.method.label(),
                num(reference.p00[i]),
                num(s.p00[i]),
                num((s.p00[i] - reference.p00[i]).abs()),
                num(max)
            );
        }
    }
    out
}

/// Parse the fixed-schema CSV back into `(t, p00, method)` rows.
pub fn read_series_csv(text: &str) -> Result<Vec<(f64, f64, String)>, CliError> {
    let mut lines = text.lines();
    if lines.next() != Some(SERIES_HEADER) {
        return Err(CliError::Config("unexpected CSV header".into()));
    }
    lines
        .enumerate()
        .map(|(k, line)| {
            let cols: Vec<&str> = line.split(", ").collect();
            let bad = || CliError::Config(format!("malformed CSV row {}", k + 2));
            if cols.len() != 7 {
                return Err(bad());
            }
            let t = cols[0].parse().map_err(|_| bad())?;
            let p = cols[1].parse().map_err(|_| bad())?;
            Ok((t, p, cols[6].to_string()))
        })
        .collect()
}

/// `key = value` report, one entry per line.
#[derive(Debug, Default, Clone)]
pub struct Report {
    lines: Vec<(String, String)>,
}

impl Report {
    pub fn float(&mut self, key: &str, x: f64) -> &mut Self {
        self.lines.push((key.to_string(), num(x)));
        self
    }

    pub fn text(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        self.lines.push((key.to_string(), value.to_string()));
        self
    }

    pub fn render(&self) -> String {
        self.lines.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}
