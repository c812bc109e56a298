//! Seeded random polynomial data for sampled identity checks.
//!
//! Coefficients are small integers so that polynomial rewrites stay exact.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::algebroid::Section;
use crate::calculus::QForm;
use crate::expr::Expr;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A polynomial of total degree at most 2 in coordinates `0..n`.
pub fn polynomial<R: Rng>(rng: &mut R, n: usize) -> Expr {
    let mut terms = vec![Expr::constant(rng.gen_range(-3..=3) as f64)];
    let linear = rng.gen_range(1..=2);
    for _ in 0..linear {
        let c = nonzero(rng);
        terms.push(Expr::constant(c) * Expr::var(rng.gen_range(0..n)));
    }
    let quadratic = rng.gen_range(0..=2);
    for _ in 0..quadratic {
        let c = nonzero(rng);
        let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
        terms.push(Expr::product([Expr::constant(c), Expr::var(i), Expr::var(j)]));
    }
    Expr::sum(terms)
}

fn nonzero<R: Rng>(rng: &mut R) -> f64 {
    let c = rng.gen_range(1..=3) as f64;
    if rng.gen_bool(0.5) {
        c
    } else {
        -c
    }
}

pub fn section<R: Rng>(rng: &mut R, n: usize, m: usize) -> Section {
    Section((0..m).map(|_| polynomial(rng, n)).collect())
}

pub fn form<R: Rng>(rng: &mut R, n: usize, m: usize, degree: usize) -> QForm {
    let count = crate::calculus::binomial(m, degree);
    let comps = (0..count).map(|_| polynomial(rng, n)).collect();
    QForm::new(m, degree, comps).expect("component count matches by construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_polynomial() {
        let a = polynomial(&mut rng(7), 3);
        let b = polynomial(&mut rng(7), 3);
        assert_eq!(a, b);
        assert!(a.max_var().unwrap() < 3);
    }
}
