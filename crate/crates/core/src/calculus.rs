//! Exterior calculus on algebroid sections.
//!
//! A [`QForm`] of degree `q` stores its components against the dual basis
//! `e^a` on strictly increasing index tuples; other tuples are recovered by
//! antisymmetry. The differential uses constant basis sections, so the
//! derivative terms reduce to `rho_a^i d_i` of components and the bracket
//! terms to contractions with the structure functions.

use crate::algebroid::{Algebroid, Section};
use crate::expr::{simplify, Expr};
use crate::report::{sweep, CheckConfig, CheckRecord, VerificationReport};
use crate::{Error, Result};

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Strictly increasing `k`-tuples drawn from `0..n`, in lexicographic order.
pub fn increasing_tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

/// Sorts `idx` in place and returns the permutation sign, or `None` when an
/// index repeats.
pub fn sort_with_sign(idx: &mut [usize]) -> Option<f64> {
    let mut sign = 1.0;
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if idx.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some(sign)
    }
}

fn permutations(k: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(rest: Vec<usize>, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest.is_empty() {
            out.push(cur.clone());
            return;
        }
        for (i, &r) in rest.iter().enumerate() {
            let mut next = rest.clone();
            next.remove(i);
            cur.push(r);
            rec(next, cur, out);
            cur.pop();
        }
    }
    let mut perms = Vec::new();
    rec((0..k).collect(), &mut Vec::new(), &mut perms);
    perms
        .into_iter()
        .map(|p| {
            let mut q = p.clone();
            let s = sort_with_sign(&mut q).unwrap();
            (p, s)
        })
        .collect()
}

/// Determinant of `matrix[rows[r]][cols[c]]` by permutation expansion.
fn minor(matrix: &[Vec<Expr>], rows: &[usize], cols: &[usize]) -> Expr {
    let k = rows.len();
    Expr::sum(permutations(k).into_iter().map(|(p, sign)| {
        Expr::product(
            std::iter::once(Expr::constant(sign))
                .chain((0..k).map(|r| matrix[rows[r]][cols[p[r]]].clone())),
        )
    }))
}

/// Alternating `q`-form on sections of a rank `m` bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct QForm {
    rank: usize,
    degree: usize,
    tuples: Vec<Vec<usize>>,
    comps: Vec<Expr>,
}

impl QForm {
    /// Components are listed in the order of [`increasing_tuples`].
    pub fn new(rank: usize, degree: usize, comps: Vec<Expr>) -> Result<Self> {
        if degree > rank {
            return Err(Error::Degree { degree, rank });
        }
        let tuples = increasing_tuples(rank, degree);
        if comps.len() != tuples.len() {
            return Err(Error::Shape(format!(
                "a {degree}-form on rank {rank} has {} components, got {}",
                tuples.len(),
                comps.len()
            )));
        }
        Ok(QForm { rank, degree, tuples, comps: comps.iter().map(simplify).collect() })
    }

    pub fn zero(rank: usize, degree: usize) -> Self {
        let tuples = increasing_tuples(rank, degree);
        let comps = vec![Expr::zero(); tuples.len()];
        QForm { rank, degree, tuples, comps }
    }

    pub fn function(rank: usize, f: Expr) -> Self {
        QForm::new(rank, 0, vec![f]).expect("one component")
    }

    /// The dual basis form `e^g`.
    pub fn dual_basis(rank: usize, g: usize) -> Self {
        let mut w = QForm::zero(rank, 1);
        w.comps[g] = Expr::one();
        w
    }

    /// Builds a form from its value on each increasing tuple.
    pub fn from_fn(rank: usize, degree: usize, f: impl Fn(&[usize]) -> Expr) -> Result<Self> {
        if degree > rank {
            return Err(Error::Degree { degree, rank });
        }
        let comps = increasing_tuples(rank, degree).iter().map(|t| f(t)).collect();
        QForm::new(rank, degree, comps)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn components(&self) -> &[Expr] {
        &self.comps
    }

    pub fn tuples(&self) -> &[Vec<usize>] {
        &self.tuples
    }

    /// `omega(e_{idx[0]}, ..., e_{idx[q-1]})` for any index tuple.
    pub fn component(&self, idx: &[usize]) -> Expr {
        let mut sorted = idx.to_vec();
        match sort_with_sign(&mut sorted) {
            None => Expr::zero(),
            Some(sign) => {
                let k = self.tuples.binary_search(&sorted).expect("indices within rank");
                if sign > 0.0 {
                    self.comps[k].clone()
                } else {
                    -self.comps[k].clone()
                }
            }
        }
    }

    /// `omega(s_1, ..., s_q)` by multilinear expansion.
    pub fn evaluate(&self, sections: &[Section]) -> Result<Expr> {
        if sections.len() != self.degree {
            return Err(Error::Degree { degree: sections.len(), rank: self.rank });
        }
        if let Some(s) = sections.iter().find(|s| s.rank() != self.rank) {
            return Err(Error::RankMismatch { expected: self.rank, got: s.rank() });
        }
        // matrix[a][c] = s_c^a
        let matrix: Vec<Vec<Expr>> = (0..self.rank)
            .map(|a| sections.iter().map(|s| s.0[a].clone()).collect())
            .collect();
        let cols: Vec<usize> = (0..self.degree).collect();
        Ok(simplify(&Expr::sum(self.tuples.iter().zip(&self.comps).filter(|(_, w)| !w.is_zero()).map(
            |(t, w)| w * minor(&matrix, t, &cols),
        ))))
    }

    pub fn sub(&self, other: &QForm) -> Result<QForm> {
        if self.rank != other.rank || self.degree != other.degree {
            return Err(Error::Shape("forms differ in rank or degree".into()));
        }
        if self.degree > self.rank {
            return Ok(self.clone());
        }
        QForm::new(
            self.rank,
            self.degree,
            self.comps.iter().zip(&other.comps).map(|(a, b)| a - b).collect(),
        )
    }
}

fn check_form(alg: &Algebroid, w: &QForm) -> Result<()> {
    if w.rank != alg.rank() {
        return Err(Error::RankMismatch { expected: alg.rank(), got: w.rank });
    }
    Ok(())
}

/// Lie derivative `L_s omega`; on functions it is `rho(s)(f)`.
pub fn lie_derivative(alg: &Algebroid, s: &Section, w: &QForm) -> Result<QForm> {
    check_form(alg, w)?;
    let m = alg.rank();
    let v = alg.anchor_apply(s)?;
    // [s, e_b] for every basis section
    let brackets: Vec<Section> = (0..m)
        .map(|b| alg.bracket(s, &Section::basis(m, b)))
        .collect::<Result<_>>()?;
    QForm::from_fn(m, w.degree, |t| {
        let mut terms = vec![v.apply(&w.component(t))];
        for (k, &b) in t.iter().enumerate() {
            for (g, coef) in brackets[b].0.iter().enumerate() {
                if coef.is_zero() {
                    continue;
                }
                let mut idx = t.to_vec();
                idx[k] = g;
                terms.push(-(coef * w.component(&idx)));
            }
        }
        Expr::sum(terms)
    })
}

/// Exterior differential `d_rho`. On functions `(d f)_a = rho_a^i d_i f`;
/// forms of degree `m` and above map to zero forms without components.
pub fn d_rho(alg: &Algebroid, w: &QForm) -> Result<QForm> {
    check_form(alg, w)?;
    let m = alg.rank();
    let q = w.degree;
    if q >= m {
        return Ok(QForm { rank: m, degree: q + 1, tuples: Vec::new(), comps: Vec::new() });
    }
    let fields: Vec<_> = (0..m)
        .map(|a| alg.anchor_apply(&Section::basis(m, a)))
        .collect::<Result<_>>()?;
    QForm::from_fn(m, q + 1, |t| {
        let mut terms = Vec::new();
        for i in 0..=q {
            let rest: Vec<usize> = t.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, &a)| a).collect();
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            terms.push(Expr::constant(sign) * fields[t[i]].apply(&w.component(&rest)));
        }
        for i in 0..=q {
            for j in i + 1..=q {
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                let rest: Vec<usize> = t
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| *k != i && *k != j)
                    .map(|(_, &a)| a)
                    .collect();
                for g in 0..m {
                    let c = alg.structure_fn(t[i], t[j], g);
                    if c.is_zero() {
                        continue;
                    }
                    let mut idx = vec![g];
                    idx.extend_from_slice(&rest);
                    terms.push(Expr::product([Expr::constant(sign), c.clone(), w.component(&idx)]));
                }
            }
        }
        Expr::sum(terms)
    })
}

/// Sampled max component of `d_rho(d_rho omega)`.
pub fn check_d_squared(alg: &Algebroid, w: &QForm, cfg: &CheckConfig) -> Result<CheckRecord> {
    let pts = alg.samples(cfg.samples);
    sweep("d_squared", std::slice::from_ref(w), &pts, cfg.tol, |w| {
        let dd = d_rho(alg, &d_rho(alg, w)?)?;
        Ok((format!("degree {} form", w.degree), dd.comps))
    })
}

/// `d^2 = 0` over seeded random polynomial forms of the given degrees.
pub fn check_d_squared_random(
    alg: &Algebroid,
    degrees: &[usize],
    per_degree: usize,
    cfg: &CheckConfig,
) -> Result<CheckRecord> {
    let mut rng = crate::random::rng(cfg.seed ^ 0xd5);
    let forms: Vec<(String, QForm)> = degrees
        .iter()
        .filter(|&&q| q <= alg.rank())
        .flat_map(|&q| (0..per_degree).map(move |k| (q, k)))
        .map(|(q, k)| {
            let w = crate::random::form(&mut rng, alg.base_dim(), alg.rank(), q);
            (format!("random {q}-form #{k}"), w)
        })
        .collect();
    let pts = alg.samples(cfg.samples);
    sweep("d_squared", &forms, &pts, cfg.tol, |(label, w)| {
        Ok((label.clone(), d_rho(alg, &d_rho(alg, w)?)?.comps))
    })
}

/// A vector bundle map `E -> E'` over `phi: M -> M'`, linear on fibers:
/// `base_map[k]` is the `k`-th target coordinate and `fiber[a'][a]` the
/// matrix of the fiber map, both as expressions in source coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct BundleMorphism {
    pub base_map: Vec<Expr>,
    pub fiber: Vec<Vec<Expr>>,
}

impl BundleMorphism {
    pub fn new(base_map: Vec<Expr>, fiber: Vec<Vec<Expr>>) -> Result<Self> {
        let cols = fiber.first().map_or(0, Vec::len);
        if fiber.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("fiber matrix rows differ in length".into()));
        }
        Ok(BundleMorphism {
            base_map: base_map.iter().map(simplify).collect(),
            fiber: fiber.into_iter().map(|r| r.iter().map(simplify).collect()).collect(),
        })
    }

    pub fn identity(n: usize, m: usize) -> Self {
        let fiber = (0..m)
            .map(|a| (0..m).map(|b| Expr::constant(if a == b { 1.0 } else { 0.0 })).collect())
            .collect();
        BundleMorphism { base_map: (0..n).map(Expr::var).collect(), fiber }
    }

    /// Coordinate inclusion `R^n -> R^{n'}` with `Id` padded by zero rows on
    /// fibers, `R^m -> R^{m'}`.
    pub fn canonical_injection(n: usize, n_target: usize, m: usize, m_target: usize) -> Self {
        let base_map = (0..n_target)
            .map(|k| if k < n { Expr::var(k) } else { Expr::zero() })
            .collect();
        let fiber = (0..m_target)
            .map(|a| (0..m).map(|b| Expr::constant(if a == b { 1.0 } else { 0.0 })).collect())
            .collect();
        BundleMorphism { base_map, fiber }
    }

    pub fn source_rank(&self) -> usize {
        self.fiber.first().map_or(0, Vec::len)
    }

    pub fn target_rank(&self) -> usize {
        self.fiber.len()
    }

    pub fn target_dim(&self) -> usize {
        self.base_map.len()
    }

    pub fn check_shapes(&self, src: &Algebroid, tgt: &Algebroid) -> Result<()> {
        if self.base_map.len() != tgt.base_dim()
            || self.fiber.len() != tgt.rank()
            || self.source_rank() != src.rank()
        {
            return Err(Error::Shape(format!(
                "morphism with fiber {}x{} over a map into R^{} does not fit rank {} -> rank {} over R^{}",
                self.target_rank(),
                self.source_rank(),
                self.base_map.len(),
                src.rank(),
                tgt.rank(),
                tgt.base_dim()
            )));
        }
        let too_far = self
            .base_map
            .iter()
            .chain(self.fiber.iter().flatten())
            .filter_map(Expr::max_var)
            .any(|k| k >= src.base_dim());
        if too_far {
            return Err(Error::Shape("morphism references coordinates outside the source base".into()));
        }
        Ok(())
    }

    /// `psi . s` as a section along `phi`, in source coordinates.
    pub fn push_section(&self, s: &Section) -> Section {
        Section(
            self.fiber
                .iter()
                .map(|row| simplify(&Expr::sum(row.iter().zip(&s.0).map(|(a, b)| a * b))))
                .collect(),
        )
    }

    /// The composite "apply `self`, then `next`".
    pub fn then(&self, next: &BundleMorphism) -> BundleMorphism {
        let base_map = next.base_map.iter().map(|e| simplify(&e.substitute(&self.base_map))).collect();
        let moved: Vec<Vec<Expr>> = next
            .fiber
            .iter()
            .map(|row| row.iter().map(|e| e.substitute(&self.base_map)).collect())
            .collect();
        let fiber = moved
            .iter()
            .map(|row| {
                (0..self.source_rank())
                    .map(|b| {
                        simplify(&Expr::sum(
                            row.iter().zip(&self.fiber).map(|(x, r)| x * &r[b]),
                        ))
                    })
                    .collect()
            })
            .collect();
        BundleMorphism { base_map, fiber }
    }

    /// Jacobian `d phi^k / d x^i` of the base map.
    pub fn base_jacobian(&self, source_dim: usize) -> Vec<Vec<Expr>> {
        self.base_map
            .iter()
            .map(|e| (0..source_dim).map(|i| simplify(&e.diff(i))).collect())
            .collect()
    }
}

/// `(psi^* omega')(s_1..s_q) = omega'_{phi(x)}(psi s_1, .., psi s_q)`.
pub fn pullback(psi: &BundleMorphism, w: &QForm) -> Result<QForm> {
    if w.rank != psi.target_rank() {
        return Err(Error::Shape(format!(
            "form of rank {} cannot be pulled back along a fiber map into rank {}",
            w.rank,
            psi.target_rank()
        )));
    }
    let m = psi.source_rank();
    if w.degree > m {
        return Ok(QForm { rank: m, degree: w.degree, tuples: Vec::new(), comps: Vec::new() });
    }
    let moved: Vec<Expr> = w.comps.iter().map(|c| c.substitute(&psi.base_map)).collect();
    QForm::from_fn(m, w.degree, |cols| {
        Expr::sum(
            w.tuples
                .iter()
                .zip(&moved)
                .filter(|(_, c)| !c.is_zero())
                .map(|(rows, c)| c * minor(&psi.fiber, rows, cols)),
        )
    })
}

/// Sampled residual of `d_rho . psi^* - psi^* . d_rho'` on the generators
/// of the target form algebra: the coordinate functions `x'^k` and the dual
/// basis forms `e'^g`. Both operators are compatible with wedge products,
/// so agreement on generators gives agreement in every degree.
pub fn check_morphism(
    psi: &BundleMorphism,
    src: &Algebroid,
    tgt: &Algebroid,
    cfg: &CheckConfig,
) -> Result<VerificationReport> {
    psi.check_shapes(src, tgt)?;
    let pts = src.samples(cfg.samples);
    let mut report = VerificationReport::new(cfg.tol);
    let residual = |w: &QForm| -> Result<Vec<Expr>> {
        let lhs = d_rho(src, &pullback(psi, w)?)?;
        let rhs = pullback(psi, &d_rho(tgt, w)?)?;
        Ok(lhs.sub(&rhs)?.comps)
    };
    let coords: Vec<usize> = (0..tgt.base_dim()).collect();
    report.push(sweep("morphism: coordinate functions", &coords, &pts, cfg.tol, |&k| {
        let w = QForm::function(tgt.rank(), Expr::var(k));
        Ok((format!("x'{}", k + 1), residual(&w)?))
    })?);
    let duals: Vec<usize> = (0..tgt.rank()).collect();
    report.push(sweep("morphism: dual basis", &duals, &pts, cfg.tol, |&g| {
        Ok((format!("e'{}", g + 1), residual(&QForm::dual_basis(tgt.rank(), g))?))
    })?);
    Ok(report)
}
