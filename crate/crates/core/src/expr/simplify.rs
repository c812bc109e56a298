//! Best-effort simplification into a sum-of-monomials form.
//!
//! Expressions are expanded into Laurent polynomials over three kinds of
//! atoms: coordinates, logarithms of simplified arguments, and reciprocals
//! of simplified multi-term polynomials. Within a single product, identical
//! polynomial factors are grouped before expansion so that `p * q / p`
//! cancels even when `p` has several terms. The result is rebuilt in a fixed
//! term order, so two expressions with the same expansion print identically.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use super::{Expr, Node};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Atom {
    Var(usize),
    Ln(Expr),
    /// `1 / p` for a multi-term polynomial `p` in rebuilt form.
    Recip(Expr),
}

type Monomial = Vec<(Atom, i32)>;

#[derive(Clone, Debug, Default, PartialEq)]
struct Poly {
    terms: BTreeMap<Monomial, f64>,
}

impl Poly {
    fn constant(c: f64) -> Self {
        let mut p = Poly::default();
        p.add_term(Vec::new(), c);
        p
    }

    fn atom(a: Atom) -> Self {
        let mut p = Poly::default();
        p.add_term(vec![(a, 1)], 1.0);
        p
    }

    fn add_term(&mut self, mono: Monomial, coef: f64) {
        if coef == 0.0 {
            return;
        }
        match self.terms.entry(mono) {
            Entry::Vacant(v) => {
                v.insert(coef);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += coef;
                if *o.get() == 0.0 {
                    o.remove();
                }
            }
        }
    }

    fn add(mut self, other: &Poly) -> Self {
        for (m, c) in &other.terms {
            self.add_term(m.clone(), *c);
        }
        self
    }

    fn scale(mut self, k: f64) -> Self {
        if k == 0.0 {
            return Poly::default();
        }
        for c in self.terms.values_mut() {
            *c *= k;
        }
        self
    }

    fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::default();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(mul_monomials(m1, m2), c1 * c2);
            }
        }
        out
    }

    fn pow(&self, k: u32) -> Poly {
        let mut acc = Poly::constant(1.0);
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    fn as_constant(&self) -> Option<f64> {
        match self.terms.len() {
            0 => Some(0.0),
            1 => self.terms.get(&Vec::new()).copied(),
            _ => None,
        }
    }

    /// Inverse of a single nonzero monomial, if that is what `self` is.
    fn invert_monomial(&self) -> Option<Poly> {
        if self.terms.len() != 1 {
            return None;
        }
        let (m, c) = self.terms.iter().next().unwrap();
        let inv: Monomial = m.iter().map(|(a, e)| (a.clone(), -e)).collect();
        let mut p = Poly::default();
        p.add_term(inv, 1.0 / c);
        Some(p)
    }
}

fn mul_monomials(a: &Monomial, b: &Monomial) -> Monomial {
    let mut out: Monomial = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
            out.push(a[i].clone());
            i += 1;
        } else if i == a.len() || b[j].0 < a[i].0 {
            out.push(b[j].clone());
            j += 1;
        } else {
            let e = a[i].1 + b[j].1;
            if e != 0 {
                out.push((a[i].0.clone(), e));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

/// Returns an expression equal to `e` wherever `e` is defined, with
/// constant folding, absorption of 0 and 1, and cancellation of like terms.
pub fn simplify(e: &Expr) -> Expr {
    from_poly(&to_poly(e))
}

fn to_poly(e: &Expr) -> Poly {
    match e.node() {
        Node::Const(c) => Poly::constant(*c),
        Node::Var(i) => Poly::atom(Atom::Var(*i)),
        Node::Add(ts) => ts
            .iter()
            .fold(Poly::default(), |acc, t| acc.add(&to_poly(t))),
        Node::Neg(a) => to_poly(a).scale(-1.0),
        Node::Ln(a) => {
            let arg = to_poly(a);
            match arg.as_constant() {
                Some(c) if c > 0.0 => Poly::constant(c.ln()),
                _ => Poly::atom(Atom::Ln(from_poly(&arg))),
            }
        }
        Node::Mul(_) | Node::Div(..) | Node::Pow(..) => {
            let mut factors: Vec<(Poly, i32)> = Vec::new();
            collect_factors(e, 1, &mut factors);
            product_of_factors(factors)
        }
    }
}

fn collect_factors(e: &Expr, exp: i32, out: &mut Vec<(Poly, i32)>) {
    match e.node() {
        Node::Mul(fs) => fs.iter().for_each(|f| collect_factors(f, exp, out)),
        Node::Div(a, b) => {
            collect_factors(a, exp, out);
            collect_factors(b, -exp, out);
        }
        Node::Pow(a, k) => collect_factors(a, exp * k, out),
        _ => {
            let p = to_poly(e);
            match out.iter_mut().find(|(q, _)| *q == p) {
                Some(slot) => slot.1 += exp,
                None => out.push((p, exp)),
            }
        }
    }
}

fn product_of_factors(factors: Vec<(Poly, i32)>) -> Poly {
    let mut acc = Poly::constant(1.0);
    for (p, exp) in factors {
        if exp == 0 {
            continue;
        }
        let k = exp.unsigned_abs();
        let term = if exp > 0 {
            p.pow(k)
        } else if let Some(c) = p.as_constant() {
            if c == 0.0 {
                // Keep the singular reciprocal visible to `eval`.
                Poly::atom(Atom::Recip(Expr::zero())).pow(k)
            } else {
                Poly::constant(1.0 / c).pow(k)
            }
        } else if let Some(inv) = p.invert_monomial() {
            inv.pow(k)
        } else {
            Poly::atom(Atom::Recip(from_poly(&p))).pow(k)
        };
        acc = acc.mul(&term);
        if acc.terms.is_empty() {
            break;
        }
    }
    acc
}

fn atom_expr(a: &Atom, exp: i32) -> Expr {
    match a {
        Atom::Var(i) => Expr::var(*i).powi(exp),
        Atom::Ln(arg) => Expr::from_node(Node::Ln(arg.clone())).powi(exp),
        Atom::Recip(p) => Expr::from_node(Node::Pow(p.clone(), -exp)),
    }
}

fn from_poly(p: &Poly) -> Expr {
    let terms: Vec<Expr> = p
        .terms
        .iter()
        .map(|(m, c)| {
            let factors: Vec<Expr> = m.iter().map(|(a, e)| atom_expr(a, *e)).collect();
            let body = match factors.len() {
                0 => return Expr::constant(*c),
                1 => factors.into_iter().next().unwrap(),
                _ => Expr::from_node(Node::Mul(factors)),
            };
            if *c == 1.0 {
                body
            } else if *c == -1.0 {
                Expr::from_node(Node::Neg(body))
            } else {
                match body.node() {
                    Node::Mul(fs) => {
                        let mut v = Vec::with_capacity(fs.len() + 1);
                        v.push(Expr::constant(*c));
                        v.extend(fs.iter().cloned());
                        Expr::from_node(Node::Mul(v))
                    }
                    _ => Expr::from_node(Node::Mul(vec![Expr::constant(*c), body])),
                }
            }
        })
        .collect();
    match terms.len() {
        0 => Expr::zero(),
        1 => terms.into_iter().next().unwrap(),
        _ => Expr::from_node(Node::Add(terms)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Expr {
        Expr::var(0)
    }
    fn y() -> Expr {
        Expr::var(1)
    }

    #[test]
    fn absorbs_zero() {
        let e = Expr::from_node(Node::Add(vec![x(), Expr::zero()]));
        assert_eq!(simplify(&e), x());
    }

    #[test]
    fn cancels_commutator() {
        let e = Expr::from_node(Node::Add(vec![
            Expr::from_node(Node::Mul(vec![x(), y()])),
            Expr::from_node(Node::Neg(Expr::from_node(Node::Mul(vec![y(), x()])))),
        ]));
        assert!(simplify(&e).is_zero());
    }

    #[test]
    fn absorbs_one() {
        let sq = Expr::from_node(Node::Pow(x(), 2));
        let e = Expr::from_node(Node::Mul(vec![Expr::one(), sq.clone()]));
        assert_eq!(simplify(&e), sq);
    }

    #[test]
    fn cancels_multi_term_factor() {
        let r2 = x().powi(2) + y().powi(2);
        let e = (r2.clone() / Expr::constant(2.0)) * (Expr::constant(2.0) * y() / r2);
        assert_eq!(simplify(&e), y());
    }

    #[test]
    fn monomial_division() {
        let e = (x().powi(3) * y()) / (Expr::constant(2.0) * x());
        let s = simplify(&e);
        assert_eq!(s, simplify(&(Expr::constant(0.5) * x().powi(2) * y())));
    }

    #[test]
    fn idempotent_on_log_fragment() {
        let e = (x().powi(2) + y().powi(2)).ln() * (x() / (x() + y()));
        let s = simplify(&e);
        assert_eq!(simplify(&s), s);
        let pt = [0.7, 1.3];
        let (a, b) = (e.eval(&pt).unwrap(), s.eval(&pt).unwrap());
        assert!((a - b).abs() <= 1e-12 * a.abs());
    }
}
