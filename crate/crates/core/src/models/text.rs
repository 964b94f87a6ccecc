//! One-line text form of a model, e.g.
//! `kind=hyperexp; alphas=0.92,0.08; means=12.1534,40.4655`.

use super::{InterdistanceModel, ModelKind};
use crate::error::{Error, Result};
use std::fmt;
use std::str::FromStr;

fn join(xs: &[f64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl fmt::Display for InterdistanceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            ModelKind::Exponential { rate } => write!(f, "kind=exp; mean={}", 1.0 / rate),
            ModelKind::Hyperexponential { weights, rates } => {
                let means: Vec<f64> = rates.iter().map(|r| 1.0 / r).collect();
                write!(f, "kind=hyperexp; alphas={}; means={}", join(weights), join(&means))
            }
            ModelKind::Empirical { samples } => write!(f, "kind=empirical; gaps={}", join(samples)),
        }
    }
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .map(|t| {
            t.trim().parse::<f64>().map_err(|_| Error::Parse {
                line: 1,
                message: format!("bad number {t:?} in {key}"),
            })
        })
        .collect()
}

fn bad(message: String) -> Error {
    Error::Parse { line: 1, message }
}

impl FromStr for InterdistanceModel {
    type Err = Error;

    /// Accepts `;`-separated `key=value` fields. Keys: `kind` (`exp`,
    /// `hyperexp`, `empirical`), `mean`/`rate` for exponentials,
    /// `alphas` with `means` or `rates` for mixtures, `gaps` for empirical.
    fn from_str(s: &str) -> Result<Self> {
        let mut kind = None;
        let mut fields: Vec<(String, Vec<f64>)> = Vec::new();
        for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, got {part:?}")))?;
            let (k, v) = (k.trim(), v.trim());
            if k == "kind" {
                kind = Some(v.to_string());
            } else {
                fields.push((k.to_string(), parse_list(k, v)?));
            }
        }
        let get = |name: &str| fields.iter().find(|(k, _)| k == name).map(|(_, v)| v.clone());
        let scalar = |name: &str| -> Option<Result<f64>> {
            get(name).map(|v| match v.as_slice() {
                [x] => Ok(*x),
                _ => Err(bad(format!("{name} takes a single value"))),
            })
        };
        for (k, _) in &fields {
            if !["mean", "rate", "alphas", "means", "rates", "gaps"].contains(&k.as_str()) {
                return Err(bad(format!("unknown key {k:?}")));
            }
        }
        match kind.as_deref() {
            Some("exp") | Some("exponential") => match (scalar("mean"), scalar("rate")) {
                (Some(m), None) => InterdistanceModel::exponential_mean(m?),
                (None, Some(r)) => InterdistanceModel::exponential(r?),
                _ => Err(bad("exponential needs exactly one of mean, rate".into())),
            },
            Some("hyperexp") | Some("hyperexponential") => {
                let alphas = get("alphas").ok_or_else(|| bad("hyperexp needs alphas".into()))?;
                match (get("means"), get("rates")) {
                    (Some(m), None) => InterdistanceModel::hyperexponential_means(alphas, &m),
                    (None, Some(r)) => InterdistanceModel::hyperexponential(alphas, r),
                    _ => Err(bad("hyperexp needs exactly one of means, rates".into())),
                }
            }
            Some("empirical") => {
                InterdistanceModel::empirical(get("gaps").ok_or_else(|| bad("empirical needs gaps".into()))?)
            }
            Some(other) => Err(bad(format!("unknown model kind {other:?}"))),
            None => Err(bad("missing kind".into())),
        }
    }
}


/// Reads a sample file: one decimal distance per line. Blank lines and lines
/// starting with `#` are skipped.
pub fn read_samples<R: std::io::BufRead>(reader: R) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let v: f64 = t.parse().map_err(|_| Error::Parse { line: i + 1, message: format!("not a number: {t:?}") })?;
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::Parse { line: i + 1, message: format!("distance must be nonnegative: {t}") });
        }
        out.push(v);
    }
    Ok(out)
}

pub fn write_samples<W: std::io::Write>(mut w: W, samples: &[f64]) -> Result<()> {
    for x in samples {
        writeln!(w, "{x}")?;
    }
    Ok(())
}
