//! Verification reports and the sampled-residual sweep used by every check.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::expr::{EvalError, Expr};
use crate::Result;

/// Tolerance and sampling parameters shared by all checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckConfig {
    pub tol: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig { tol: 1e-9, samples: 64, seed: 0x5eed }
    }
}

/// One line of a report: the largest residual of a check over its sites
/// and sample points, and where it occurred.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub check: String,
    pub site: String,
    pub max_residual: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
}

impl CheckRecord {
    pub fn new(check: impl Into<String>, site: impl Into<String>, max_residual: f64, tol: f64) -> Self {
        CheckRecord {
            check: check.into(),
            site: site.into(),
            max_residual,
            pass: max_residual < tol,
            point: None,
        }
    }

    /// A record for a condition that holds structurally (no residual).
    pub fn structural(check: impl Into<String>, site: impl Into<String>) -> Self {
        CheckRecord::new(check, site, 0.0, f64::INFINITY)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub tolerance: f64,
    pub checks: Vec<CheckRecord>,
}

impl VerificationReport {
    pub fn new(tolerance: f64) -> Self {
        VerificationReport { tolerance, checks: Vec::new() }
    }

    pub fn push(&mut self, record: CheckRecord) {
        self.checks.push(record);
    }

    pub fn extend(&mut self, other: VerificationReport) {
        self.checks.extend(other.checks);
    }

    /// Prefixes every check name, e.g. with the level pair it belongs to.
    pub fn prefixed(mut self, prefix: &str) -> Self {
        for c in &mut self.checks {
            c.check = format!("{prefix}{}", c.check);
        }
        self
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn max_residual(&self) -> f64 {
        self.checks.iter().map(|c| c.max_residual).fold(0.0, f64::max)
    }

    /// The record with the largest residual, if any.
    pub fn worst(&self) -> Option<&CheckRecord> {
        self.checks
            .iter()
            .fold(None, |best: Option<&CheckRecord>, c| match best {
                Some(b) if b.max_residual >= c.max_residual => Some(b),
                _ => Some(c),
            })
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn find(&self, check: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.check == check)
    }
}

/// A constructed value together with the checks run on it. A failing
/// report flags the value without discarding it.
#[derive(Debug, Clone)]
pub struct Checked<T> {
    pub value: T,
    pub report: VerificationReport,
}

impl<T> Checked<T> {
    pub fn is_flagged(&self) -> bool {
        !self.report.passed()
    }
}

fn magnitude(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v.abs()
    }
}

/// Largest `|e(p)|` over `exprs` and `points`, with the point where it occurs.
pub fn sampled_residual(exprs: &[Expr], points: &[Vec<f64>]) -> Result<(f64, Option<Vec<f64>>), EvalError> {
    let live: Vec<&Expr> = exprs.iter().filter(|e| !e.is_zero()).collect();
    if live.is_empty() {
        return Ok((0.0, None));
    }
    let per_point: Vec<f64> = points
        .par_iter()
        .map(|p| {
            live.iter()
                .try_fold(0.0f64, |acc, e| Ok(acc.max(magnitude(e.eval(p)?))))
        })
        .collect::<Result<_, EvalError>>()?;
    let mut best = (0.0, None);
    for (v, p) in per_point.into_iter().zip(points) {
        if v > best.0 {
            best = (v, Some(p.clone()));
        }
    }
    Ok(best)
}

/// Runs `residual` on every site in parallel and folds the results into a
/// single record naming the worst site. `residual` returns a site label and
/// the expressions that must vanish there.
pub fn sweep<T, F>(check: &str, sites: &[T], points: &[Vec<f64>], tol: f64, residual: F) -> Result<CheckRecord>
where
    T: Sync,
    F: Fn(&T) -> Result<(String, Vec<Expr>)> + Sync,
{
    let results: Vec<(String, f64, Option<Vec<f64>>)> = sites
        .par_iter()
        .map(|site| {
            let (label, exprs) = residual(site)?;
            let (r, at) = sampled_residual(&exprs, points)?;
            Ok((label, r, at))
        })
        .collect::<Result<_>>()?;
    let mut record = CheckRecord::new(check, "none", 0.0, tol);
    let mut worst = -1.0;
    for (label, r, at) in results {
        if r > worst {
            worst = r;
            record.site = label;
            record.max_residual = r;
            record.point = at;
        }
    }
    record.pass = record.max_residual < tol;
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_locates_worst_site() {
        let pts = vec![vec![1.0], vec![2.0], vec![-3.0]];
        let sites = [0.0, 2.0, 1.0];
        let rec = sweep("scale", &sites, &pts, 1e-9, |k| {
            Ok((format!("k={k}"), vec![Expr::constant(*k) * Expr::var(0)]))
        })
        .unwrap();
        assert_eq!(rec.site, "k=2");
        assert_eq!(rec.max_residual, 6.0);
        assert_eq!(rec.point, Some(vec![-3.0]));
        assert!(!rec.pass);
    }

    #[test]
    fn nan_counts_as_failure() {
        let e = Expr::var(0) - Expr::var(0);
        let (r, _) = sampled_residual(&[e], &[vec![f64::NAN]]).unwrap();
        assert!(r.is_infinite());
    }

    #[test]
    fn report_aggregates() {
        let mut rep = VerificationReport::new(1e-9);
        rep.push(CheckRecord::new("a", "s", 1e-12, 1e-9));
        rep.push(CheckRecord::new("b", "t", 0.5, 1e-9));
        assert!(!rep.passed());
        assert_eq!(rep.worst().unwrap().check, "b");
        assert_eq!(rep.failures().count(), 1);
    }
}
