//! The standard identity suite run on a single algebroid.

use crate::algebroid::Algebroid;
use crate::calculus::check_d_squared_random;
use crate::report::{CheckConfig, VerificationReport};
use crate::Result;

/// Random triples for the Leibniz rule and random forms per degree for `d^2`.
pub const RANDOM_CASES: usize = 10;

/// Leibniz rule, Jacobi identity, anchor compatibility and `d^2 = 0` on
/// random functions and 1-forms.
pub fn identity_suite(alg: &Algebroid, cfg: &CheckConfig) -> Result<VerificationReport> {
    let mut rep = VerificationReport::new(cfg.tol);
    rep.push(alg.check_leibniz_random(RANDOM_CASES, cfg)?);
    rep.push(alg.check_jacobi_default(cfg)?);
    rep.push(alg.check_anchor_bracket_default(cfg)?);
    rep.push(check_d_squared_random(alg, &[0, 1], RANDOM_CASES, cfg)?);
    Ok(rep)
}
