//! Profile documents in JSON or CSV.

use std::path::Path;

use phantom_core::{Profile, SIMPLEX_TOL};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// `{"m": 3, "votes": [[...], ...], "name": ..., "source": ...}`; other
/// fields are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileDocument {
    pub m: usize,
    pub votes: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

impl ProfileDocument {
    pub fn from_profile(profile: &Profile) -> Self {
        Self { m: profile.m(), votes: profile.to_rows(), name: None, source: None }
    }

    /// Checks the document invariants and builds the profile.
    pub fn to_profile(&self) -> Result<Profile, CliError> {
        let bad = |msg: String| Err(CliError::Invariant(msg));
        if self.m < 2 {
            return bad(format!("m must be at least 2, got {}", self.m));
        }
        if self.votes.len() < 2 {
            return bad(format!("need at least 2 votes, got {}", self.votes.len()));
        }
        for (i, row) in self.votes.iter().enumerate() {
            if row.len() != self.m {
                return bad(format!("vote {i} has {} shares, m = {}", row.len(), self.m));
            }
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return bad(format!("vote {i} has a negative or non-finite share"));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > SIMPLEX_TOL {
                return bad(format!("vote {i} sums to {s}"));
            }
        }
        Profile::new(self.votes.clone()).map_err(CliError::Core)
    }
}

pub fn parse_json(text: &str) -> Result<ProfileDocument, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Parse(format!("profile JSON: {e}")))
}

/// One voter per line, comma-separated shares, optional header line.
pub fn parse_csv(text: &str) -> Result<ProfileDocument, CliError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut votes = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Parse(format!("CSV: {e}")))?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => votes.push(row),
            Err(_) if i == 0 => continue,
            Err(e) => return Err(CliError::Parse(format!("CSV line {}: {e}", i + 1))),
        }
    }
    let m = votes.first().map_or(0, Vec::len);
    Ok(ProfileDocument { m, votes, name: None, source: None })
}

/// Reads a profile, choosing the format by extension and falling back to
/// sniffing the first non-blank character.
pub fn read_profile(path: &Path) -> Result<ProfileDocument, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let is_csv = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("csv") => true,
        Some(ext) if ext.eq_ignore_ascii_case("json") => false,
        _ => !text.trim_start().starts_with('{'),
    };
    if is_csv {
        parse_csv(&text)
    } else {
        parse_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_with_and_without_header() {
        let a = parse_csv("p1,p2\n1,0\n0.5,0.5\n").unwrap();
        let b = parse_csv("1,0\n0.5, 0.5\n").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.m, 2);
        assert!(parse_csv("1,0\nx,y\n").is_err());
    }

    #[test]
    fn json_ignores_unknown_fields() {
        let d = parse_json(r#"{"m":2,"votes":[[1,0],[0,1]],"name":"t","extra":5}"#).unwrap();
        assert_eq!(d.name.as_deref(), Some("t"));
        assert!(d.to_profile().is_ok());
        assert!(parse_json(r#"{"votes":[[1,0]]}"#).is_err());
    }

    #[test]
    fn invariants() {
        let d = ProfileDocument { m: 2, votes: vec![vec![0.6, 0.6], vec![1.0, 0.0]], name: None, source: None };
        assert!(matches!(d.to_profile(), Err(CliError::Invariant(_))));
        let d = ProfileDocument { m: 3, votes: vec![vec![0.5, 0.5], vec![1.0, 0.0]], name: None, source: None };
        assert!(matches!(d.to_profile(), Err(CliError::Invariant(_))));
    }
}
