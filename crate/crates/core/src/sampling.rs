//! Deterministic sample points: a Halton sequence mapped into a box.

/// First `n` primes.
fn primes(n: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(n);
    let mut k = 2u64;
    while out.len() < n {
        if out.iter().take_while(|&&p| p * p <= k).all(|&p| k % p != 0) {
            out.push(k);
        }
        k += 1;
    }
    out
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let step = 1.0 / base as f64;
    let mut f = step;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= step;
    }
    r
}

/// `count` Halton points in `bounds`, one prime base per coordinate. The
/// sequence starts at index 1 so the box corner is never sampled.
pub fn halton_points(bounds: &[[f64; 2]], count: usize) -> Vec<Vec<f64>> {
    let bases = primes(bounds.len());
    (1..=count as u64)
        .map(|i| {
            bounds
                .iter()
                .zip(&bases)
                .map(|(&[lo, hi], &b)| lo + (hi - lo) * radical_inverse(i, b))
                .collect()
        })
        .collect()
}
