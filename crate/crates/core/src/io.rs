//! Profile files.
//!
//! CSV layout: header `round,outcome,<label_1>,...,<label_n>`, then one line
//! per round `t,x_t,y_1t,...,y_nt` with rounds numbered `1..k` in order.
//! A JSON object with `labels`, `outcomes` and `forecasts` (expert-major)
//! is accepted as an alternative. Floats are written in shortest
//! round-trip form, so save followed by load is bit-exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PredictionProfile;

#[derive(Serialize, Deserialize)]
struct ProfileJson {
    #[serde(default)]
    labels: Option<Vec<String>>,
    outcomes: Vec<f64>,
    forecasts: Vec<Vec<f64>>,
}

fn is_json(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

/// Loads a profile; `.json` files use the JSON layout, everything else CSV.
pub fn load_profile(path: impl AsRef<Path>) -> Result<PredictionProfile> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    if is_json(path) {
        parse_profile_json(&text)
    } else {
        parse_profile_csv(&text)
    }
}

/// Saves a profile; `.json` files use the JSON layout, everything else CSV.
pub fn save_profile(profile: &PredictionProfile, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = if is_json(path) {
        profile_to_json(profile)?
    } else {
        profile_to_csv(profile)
    };
    fs::write(path, text)?;
    Ok(())
}

fn parse_cell(cell: &str, line: usize, column: usize) -> Result<f64> {
    let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
        line,
        column,
        message: format!("not a number: {cell:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            column,
            message: format!("non-finite value {cell:?}"),
        });
    }
    Ok(v)
}

pub fn parse_profile_csv(text: &str) -> Result<PredictionProfile> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = reader.records();

    let header = match records.next() {
        Some(r) => r?,
        None => {
            return Err(Error::Parse {
                line: 1,
                column: 1,
                message: "missing header".into(),
            })
        }
    };
    let cells: Vec<&str> = header.iter().map(str::trim).collect();
    if cells.len() < 3 || cells[0] != "round" || cells[1] != "outcome" {
        return Err(Error::Parse {
            line: 1,
            column: 1,
            message: "header must be `round,outcome,<label_1>,...`".into(),
        });
    }
    let labels: Vec<String> = cells[2..].iter().map(|s| s.to_string()).collect();
    let n = labels.len();

    let mut outcomes = Vec::new();
    let mut forecasts = vec![Vec::new(); n];
    for record in records {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != n + 2 {
            return Err(Error::Parse {
                line,
                column: record.len().min(n + 2) + 1,
                message: format!("expected {} cells, found {}", n + 2, record.len()),
            });
        }
        let expected_round = outcomes.len() + 1;
        let round: usize = record[0].trim().parse().map_err(|_| Error::Parse {
            line,
            column: 1,
            message: format!("bad round number {:?}", &record[0]),
        })?;
        if round != expected_round {
            return Err(Error::Parse {
                line,
                column: 1,
                message: format!("expected round {expected_round}, found {round}"),
            });
        }
        outcomes.push(parse_cell(&record[1], line, 2)?);
        for (i, row) in forecasts.iter_mut().enumerate() {
            row.push(parse_cell(&record[i + 2], line, i + 3)?);
        }
    }
    if outcomes.is_empty() {
        return Err(Error::NoRounds);
    }
    PredictionProfile::new(forecasts, outcomes, Some(labels))
}

pub fn profile_to_csv(profile: &PredictionProfile) -> String {
    let mut out = String::from("round,outcome");
    for label in profile.labels() {
        out.push(',');
        out.push_str(label);
    }
    out.push('\n');
    for (t, x) in profile.outcomes().iter().enumerate() {
        out.push_str(&format!("{},{}", t + 1, x));
        for i in 0..profile.n_experts() {
            out.push_str(&format!(",{}", profile.forecast(i, t)));
        }
        out.push('\n');
    }
    out
}

pub fn parse_profile_json(text: &str) -> Result<PredictionProfile> {
    let raw: ProfileJson = serde_json::from_str(text)?;
    PredictionProfile::new(raw.forecasts, raw.outcomes, raw.labels)
}

pub fn profile_to_json(profile: &PredictionProfile) -> Result<String> {
    let raw = ProfileJson {
        labels: Some(profile.labels().to_vec()),
        outcomes: profile.outcomes().to_vec(),
        forecasts: profile.forecast_rows(),
    };
    Ok(serde_json::to_string_pretty(&raw)?)
}
