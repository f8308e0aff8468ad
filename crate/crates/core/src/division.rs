//! Divisions of a unit budget, preference profiles and the ℓ1-loss.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, SIMPLEX_TOL};

/// Rows that already sum to one up to accumulated rounding are left untouched,
/// so that re-validating a normalized row is a no-op.
fn rounding_slack(m: usize) -> f64 {
    4.0 * m as f64 * f64::EPSILON
}

/// Validates one row against the simplex and returns it normalized.
fn normalize_row(row: &mut [f64]) -> std::result::Result<(), String> {
    if row.len() < 2 {
        return Err(format!("need at least 2 projects, got {}", row.len()));
    }
    for (j, v) in row.iter_mut().enumerate() {
        if !v.is_finite() {
            return Err(format!("share {j} is not finite"));
        }
        if *v < -SIMPLEX_TOL || *v > 1.0 + SIMPLEX_TOL {
            return Err(format!("share {j} = {v} outside [0,1]"));
        }
        *v = v.clamp(0.0, 1.0);
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(format!("shares sum to {sum}, not 1"));
    }
    if (sum - 1.0).abs() > rounding_slack(row.len()) {
        row.iter_mut().for_each(|v| *v /= sum);
    }
    Ok(())
}

/// A point on the standard simplex: `m >= 2` nonnegative shares summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Division {
    shares: Vec<f64>,
}

impl Division {
    pub fn new(mut shares: Vec<f64>) -> Result<Self> {
        normalize_row(&mut shares).map_err(Error::InvalidDivision)?;
        Ok(Self { shares })
    }

    /// The division `(1/m, ..., 1/m)`.
    pub fn uniform(m: usize) -> Result<Self> {
        Self::new(vec![1.0 / m as f64; m])
    }

    /// The unit vector putting the whole budget on `project`.
    pub fn vertex(m: usize, project: usize) -> Result<Self> {
        if project >= m {
            return Err(Error::InvalidDivision(format!(
                "project {project} out of range for m = {m}"
            )));
        }
        let mut shares = vec![0.0; m];
        shares[project] = 1.0;
        Self::new(shares)
    }

    pub fn m(&self) -> usize {
        self.shares.len()
    }

    pub fn shares(&self) -> &[f64] {
        &self.shares
    }

    pub fn into_shares(self) -> Vec<f64> {
        self.shares
    }
}

impl TryFrom<Vec<f64>> for Division {
    type Error = Error;

    fn try_from(shares: Vec<f64>) -> Result<Self> {
        Self::new(shares)
    }
}

impl From<Division> for Vec<f64> {
    fn from(d: Division) -> Self {
        d.shares
    }
}

impl std::ops::Index<usize> for Division {
    type Output = f64;

    fn index(&self, j: usize) -> &f64 {
        &self.shares[j]
    }
}

/// `n >= 2` reported divisions over a common set of `m >= 2` projects.
///
/// Rows are stored contiguously; `row(i)` borrows voter `i`'s report.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    n: usize,
    m: usize,
    data: Vec<f64>,
}

impl Profile {
    /// Builds a profile from raw rows, normalizing rows that drift from one
    /// by at most the simplex tolerance.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n < 2 {
            return Err(Error::InvalidProfile(format!("need at least 2 voters, got {n}")));
        }
        let m = rows[0].len();
        let mut data = Vec::with_capacity(n * m);
        for (i, mut row) in rows.into_iter().enumerate() {
            if row.len() != m {
                return Err(Error::InvalidProfile(format!(
                    "row {i} has {} shares, expected {m}",
                    row.len()
                )));
            }
            normalize_row(&mut row).map_err(|e| Error::InvalidProfile(format!("row {i}: {e}")))?;
            data.extend_from_slice(&row);
        }
        Ok(Self { n, m, data })
    }

    pub fn from_divisions(votes: &[Division]) -> Result<Self> {
        Self::new(votes.iter().map(|d| d.shares().to_vec()).collect())
    }

    /// Builds a profile from `(division, multiplicity)` groups.
    pub fn from_groups(groups: &[(Division, usize)]) -> Result<Self> {
        let Some((first, _)) = groups.first() else {
            return Err(Error::InvalidProfile("no voter groups".into()));
        };
        let m = first.m();
        let n: usize = groups.iter().map(|(_, c)| c).sum();
        if n < 2 {
            return Err(Error::InvalidProfile(format!("need at least 2 voters, got {n}")));
        }
        let mut data = Vec::with_capacity(n * m);
        for (d, count) in groups {
            if d.m() != m {
                return Err(Error::DimensionMismatch { expected: m, got: d.m() });
            }
            for _ in 0..*count {
                data.extend_from_slice(d.shares());
            }
        }
        Ok(Self { n, m, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.m..(i + 1) * self.m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.m)
    }

    /// Column `j` (every voter's share for project `j`).
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn division(&self, i: usize) -> Division {
        Division { shares: self.row(i).to_vec() }
    }

    /// Copy of the profile with voter `i`'s report replaced.
    pub fn with_vote(&self, i: usize, vote: &Division) -> Result<Self> {
        if vote.m() != self.m {
            return Err(Error::DimensionMismatch { expected: self.m, got: vote.m() });
        }
        let mut data = self.data.clone();
        data[i * self.m..(i + 1) * self.m].copy_from_slice(vote.shares());
        Ok(Self { n: self.n, m: self.m, data })
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }
}

/// `Σ_j |a_j − b_j|`.
pub fn l1_distance(a: &Division, b: &Division) -> Result<f64> {
    l1_slices(a.shares(), b.shares())
}

pub(crate) fn l1_slices(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum())
}

/// The coordinate-wise mean of the reports.
pub fn proportional_division(profile: &Profile) -> Division {
    let mut mean = vec![0.0; profile.m()];
    for row in profile.rows() {
        for (acc, v) in mean.iter_mut().zip(row) {
            *acc += v;
        }
    }
    let n = profile.n() as f64;
    mean.iter_mut().for_each(|v| *v /= n);
    // A mean of simplex points is a simplex point; only rounding can move it.
    Division::new(mean).expect("mean of valid rows is a division")
}

/// ℓ1 distance between `outcome` and the proportional division of `profile`.
pub fn loss(profile: &Profile, outcome: &Division) -> Result<f64> {
    if outcome.m() != profile.m() {
        return Err(Error::DimensionMismatch { expected: profile.m(), got: outcome.m() });
    }
    l1_distance(outcome, &proportional_division(profile))
}

/// Outcome of a mechanism run together with its distance from proportionality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub outcome: Division,
    /// `None` for mechanisms that do not move phantoms in time.
    pub tstar: Option<f64>,
    pub proportional: Division,
    pub loss: f64,
}

impl LossReport {
    pub fn new(profile: &Profile, outcome: Division, tstar: Option<f64>) -> Result<Self> {
        let proportional = proportional_division(profile);
        let loss = l1_distance(&outcome, &proportional)?;
        Ok(Self { outcome, tstar, proportional, loss })
    }
}
