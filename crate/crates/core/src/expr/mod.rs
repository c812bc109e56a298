//! Scalar expressions over positional coordinates.
//!
//! An [`Expr`] is an immutable tree built from constants, coordinate
//! references, sums, products, negation, quotients, integer powers and the
//! natural logarithm. That grammar is enough to hold every coefficient
//! function in this crate (anchors, structure functions, section components,
//! Hamiltonians) while keeping exact differentiation straightforward.
//!
//! Coordinates are referenced by index. Names only matter when parsing or
//! printing, see [`sexpr`].

mod simplify;
pub mod sexpr;

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use simplify::simplify;

/// Failure while evaluating an expression at a point.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("point has {got} coordinates but the expression references coordinate {index}")]
    Dimension { index: usize, got: usize },
}

#[derive(Debug, Clone)]
pub enum Node {
    Const(f64),
    Var(usize),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Neg(Expr),
    /// Quotient; the denominator must be nonzero.
    Div(Expr, Expr),
    /// Integer power; negative exponents require a nonzero base.
    Pow(Expr, i32),
    /// Natural logarithm; the argument must be positive.
    Ln(Expr),
}

/// Immutable, cheaply clonable expression tree.
#[derive(Clone)]
pub struct Expr(Arc<Node>);

impl Expr {
    /// Wraps a node without any folding. Parsers use this so that trees
    /// round-trip exactly.
    pub fn from_node(node: Node) -> Self {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn constant(c: f64) -> Self {
        Expr::from_node(Node::Const(c))
    }

    pub fn zero() -> Self {
        Expr::constant(0.0)
    }

    pub fn one() -> Self {
        Expr::constant(1.0)
    }

    pub fn var(index: usize) -> Self {
        Expr::from_node(Node::Var(index))
    }

    pub fn as_const(&self) -> Option<f64> {
        match self.node() {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    /// Sum with constant folding and removal of zero terms.
    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        let mut constant = 0.0;
        let mut rest = Vec::new();
        for t in terms {
            match t.node() {
                Node::Const(c) => constant += c,
                Node::Add(inner) => {
                    for u in inner {
                        match u.as_const() {
                            Some(c) => constant += c,
                            None => rest.push(u.clone()),
                        }
                    }
                }
                _ => rest.push(t),
            }
        }
        if constant != 0.0 {
            rest.push(Expr::constant(constant));
        }
        match rest.len() {
            0 => Expr::zero(),
            1 => rest.pop().unwrap(),
            _ => Expr::from_node(Node::Add(rest)),
        }
    }

    /// Product with constant folding; any zero factor collapses the product.
    pub fn product<I: IntoIterator<Item = Expr>>(factors: I) -> Expr {
        let mut constant = 1.0;
        let mut rest = Vec::new();
        for f in factors {
            match f.node() {
                Node::Const(c) => constant *= c,
                Node::Mul(inner) => {
                    for u in inner {
                        match u.as_const() {
                            Some(c) => constant *= c,
                            None => rest.push(u.clone()),
                        }
                    }
                }
                _ => rest.push(f),
            }
        }
        if constant == 0.0 {
            return Expr::zero();
        }
        if rest.is_empty() {
            return Expr::constant(constant);
        }
        if constant == -1.0 {
            let inner = if rest.len() == 1 {
                rest.pop().unwrap()
            } else {
                Expr::from_node(Node::Mul(rest))
            };
            return -inner;
        }
        if constant != 1.0 {
            rest.insert(0, Expr::constant(constant));
        }
        if rest.len() == 1 {
            rest.pop().unwrap()
        } else {
            Expr::from_node(Node::Mul(rest))
        }
    }

    pub fn powi(&self, k: i32) -> Expr {
        match (k, self.node()) {
            (0, _) => Expr::one(),
            (1, _) => self.clone(),
            (_, Node::Const(c)) if k > 0 => Expr::constant(c.powi(k)),
            _ => Expr::from_node(Node::Pow(self.clone(), k)),
        }
    }

    pub fn ln(&self) -> Expr {
        match self.node() {
            Node::Const(c) if *c == 1.0 => Expr::zero(),
            _ => Expr::from_node(Node::Ln(self.clone())),
        }
    }

    /// Evaluates at `pt`, which must cover every referenced coordinate.
    pub fn eval(&self, pt: &[f64]) -> Result<f64, EvalError> {
        match self.node() {
            Node::Const(c) => Ok(*c),
            Node::Var(i) => pt
                .get(*i)
                .copied()
                .ok_or(EvalError::Dimension { index: *i, got: pt.len() }),
            Node::Add(ts) => {
                let mut acc = 0.0;
                for t in ts {
                    acc += t.eval(pt)?;
                }
                Ok(acc)
            }
            Node::Mul(fs) => {
                let mut acc = 1.0;
                for f in fs {
                    acc *= f.eval(pt)?;
                }
                Ok(acc)
            }
            Node::Neg(a) => Ok(-a.eval(pt)?),
            Node::Div(a, b) => {
                let den = b.eval(pt)?;
                if den == 0.0 {
                    return Err(EvalError::Domain(format!("division by zero in {self}")));
                }
                Ok(a.eval(pt)? / den)
            }
            Node::Pow(a, k) => {
                let base = a.eval(pt)?;
                if *k < 0 && base == 0.0 {
                    return Err(EvalError::Domain(format!("zero raised to {k} in {self}")));
                }
                Ok(base.powi(*k))
            }
            Node::Ln(a) => {
                let arg = a.eval(pt)?;
                if !(arg > 0.0) {
                    return Err(EvalError::Domain(format!("ln of {arg} in {self}")));
                }
                Ok(arg.ln())
            }
        }
    }

    /// True when coordinate `index` occurs anywhere in the tree.
    pub fn depends_on(&self, index: usize) -> bool {
        match self.node() {
            Node::Const(_) => false,
            Node::Var(i) => *i == index,
            Node::Add(ts) | Node::Mul(ts) => ts.iter().any(|t| t.depends_on(index)),
            Node::Neg(a) | Node::Pow(a, _) | Node::Ln(a) => a.depends_on(index),
            Node::Div(a, b) => a.depends_on(index) || b.depends_on(index),
        }
    }

    /// Highest coordinate index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self.node() {
            Node::Const(_) => None,
            Node::Var(i) => Some(*i),
            Node::Add(ts) | Node::Mul(ts) => ts.iter().filter_map(Expr::max_var).max(),
            Node::Neg(a) | Node::Pow(a, _) | Node::Ln(a) => a.max_var(),
            Node::Div(a, b) => a.max_var().max(b.max_var()),
        }
    }

    /// Exact partial derivative with respect to coordinate `index`.
    pub fn diff(&self, index: usize) -> Expr {
        if !self.depends_on(index) {
            return Expr::zero();
        }
        match self.node() {
            Node::Const(_) => Expr::zero(),
            Node::Var(i) => {
                if *i == index {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Add(ts) => Expr::sum(ts.iter().map(|t| t.diff(index))),
            Node::Mul(fs) => Expr::sum((0..fs.len()).map(|k| {
                let dk = fs[k].diff(index);
                if dk.is_zero() {
                    return Expr::zero();
                }
                Expr::product(
                    fs.iter()
                        .enumerate()
                        .map(|(l, f)| if l == k { dk.clone() } else { f.clone() }),
                )
            })),
            Node::Neg(a) => -a.diff(index),
            Node::Div(a, b) => {
                let da = a.diff(index);
                if !b.depends_on(index) {
                    return da / b.clone();
                }
                let db = b.diff(index);
                (da * b.clone() - a.clone() * db) / b.powi(2)
            }
            Node::Pow(a, k) => Expr::product([
                Expr::constant(*k as f64),
                a.powi(k - 1),
                a.diff(index),
            ]),
            Node::Ln(a) => a.diff(index) / a.clone(),
        }
    }

    /// Replaces coordinate `i` by `values[i]`. Coordinates past the end of
    /// `values` are left unchanged.
    pub fn substitute(&self, values: &[Expr]) -> Expr {
        match self.node() {
            Node::Const(_) => self.clone(),
            Node::Var(i) => values.get(*i).cloned().unwrap_or_else(|| self.clone()),
            Node::Add(ts) => Expr::sum(ts.iter().map(|t| t.substitute(values))),
            Node::Mul(fs) => Expr::product(fs.iter().map(|f| f.substitute(values))),
            Node::Neg(a) => -a.substitute(values),
            Node::Div(a, b) => a.substitute(values) / b.substitute(values),
            Node::Pow(a, k) => a.substitute(values).powi(*k),
            Node::Ln(a) => a.substitute(values).ln(),
        }
    }

    /// Shifts every coordinate index by `offset`.
    pub fn shift_vars(&self, offset: usize) -> Expr {
        let values: Vec<Expr> = (0..=self.max_var().unwrap_or(0))
            .map(|i| Expr::var(i + offset))
            .collect();
        self.substitute(&values)
    }

    fn rank(&self) -> u8 {
        match self.node() {
            Node::Const(_) => 0,
            Node::Var(_) => 1,
            Node::Add(_) => 2,
            Node::Mul(_) => 3,
            Node::Neg(_) => 4,
            Node::Div(..) => 5,
            Node::Pow(..) => 6,
            Node::Ln(_) => 7,
        }
    }
}

impl Ord for Expr {
    /// Structural total order; constants compare with `f64::total_cmp`.
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ordering::Equal;
        }
        match (self.node(), other.node()) {
            (Node::Const(a), Node::Const(b)) => a.total_cmp(b),
            (Node::Var(a), Node::Var(b)) => a.cmp(b),
            (Node::Add(a), Node::Add(b)) | (Node::Mul(a), Node::Mul(b)) => a.cmp(b),
            (Node::Neg(a), Node::Neg(b)) | (Node::Ln(a), Node::Ln(b)) => a.cmp(b),
            (Node::Div(a1, b1), Node::Div(a2, b2)) => a1.cmp(a2).then_with(|| b1.cmp(b2)),
            (Node::Pow(a1, k1), Node::Pow(a2, k2)) => a1.cmp(a2).then_with(|| k1.cmp(k2)),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Expr {}

impl From<f64> for Expr {
    fn from(c: f64) -> Self {
        Expr::constant(c)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&sexpr::to_sexpr(self, &[]))
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        match self.node() {
            Node::Const(c) => Expr::constant(-c),
            Node::Neg(a) => a.clone(),
            _ => Expr::from_node(Node::Neg(self)),
        }
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -self.clone()
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::sum([self, rhs])
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::sum([self, -rhs])
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::product([self, rhs])
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        if self.is_zero() || rhs.is_one() {
            return self;
        }
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) if b != 0.0 => Expr::constant(a / b),
            _ => Expr::from_node(Node::Div(self, rhs)),
        }
    }
}

macro_rules! forward_ref_binop {
    ($($tr:ident $m:ident),*) => {$(
        impl std::ops::$tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                std::ops::$tr::$m(self.clone(), rhs.clone())
            }
        }
        impl std::ops::$tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                std::ops::$tr::$m(self, rhs.clone())
            }
        }
        impl std::ops::$tr<Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                std::ops::$tr::$m(self.clone(), rhs)
            }
        }
    )*};
}

forward_ref_binop!(Add add, Sub sub, Mul mul, Div div);

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
    fn eval_log_of_unit_circle_point() {
        let e = (x().powi(2) + y().powi(2)).ln();
        assert_eq!(e.eval(&[1.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn eval_half_squared_radius() {
        let e = (x().powi(2) + y().powi(2)) / Expr::constant(2.0);
        assert_eq!(e.eval(&[1.0, 1.0]).unwrap(), 1.0);
    }

    #[test]
    fn eval_commutator_is_zero() {
        let e = x() * y() - y() * x();
        assert_eq!(e.eval(&[0.3, -7.25]).unwrap(), 0.0);
    }

    #[test]
    fn eval_errors() {
        assert!(matches!(x().ln().eval(&[0.0]), Err(EvalError::Domain(_))));
        assert!(matches!(x().ln().eval(&[-1.0]), Err(EvalError::Domain(_))));
        assert!(matches!(
            Expr::from_node(Node::Div(Expr::one(), x())).eval(&[0.0]),
            Err(EvalError::Domain(_))
        ));
        assert!(matches!(x().powi(-2).eval(&[0.0]), Err(EvalError::Domain(_))));
        assert_eq!(y().eval(&[1.0]), Err(EvalError::Dimension { index: 1, got: 1 }));
    }

    #[test]
    fn diff_log_chain_rule() {
        let e = (x().powi(2) + y().powi(2)).ln();
        let d = e.diff(0);
        for pt in [[1.0, 2.0], [0.5, -0.25], [-3.0, 1.0]] {
            let expected = 2.0 * pt[0] / (pt[0] * pt[0] + pt[1] * pt[1]);
            assert!((d.eval(&pt).unwrap() - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn diff_constant_and_out_of_range() {
        assert!(Expr::constant(4.0).diff(0).is_zero());
        assert!(x().diff(7).is_zero());
    }

    #[test]
    fn diff_half_squared_radius() {
        let e = (x().powi(2) + y().powi(2)) / Expr::constant(2.0);
        assert_eq!(e.diff(0).eval(&[3.0, 4.0]).unwrap(), 3.0);
    }

    #[test]
    fn diff_quotient_rule() {
        let e = x() / (x() + y());
        let d = e.diff(0);
        let (a, b) = (1.5, 0.5);
        assert!((d.eval(&[a, b]).unwrap() - b / ((a + b) * (a + b))).abs() < 1e-14);
    }

    #[test]
    fn substitute_composes() {
        let e = x() * y();
        let s = e.substitute(&[y(), x().powi(2)]);
        assert_eq!(s.eval(&[2.0, 3.0]).unwrap(), 12.0);
    }

    #[test]
    fn smart_constructors_fold() {
        assert!((x() * Expr::zero()).is_zero());
        assert_eq!(x() + Expr::zero(), x());
        assert_eq!(Expr::one() * x(), x());
        assert_eq!(-(-x()), x());
    }
}
