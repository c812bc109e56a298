//! Lie algebroids over an open box of `R^n`, in one global chart.
//!
//! An algebroid of rank `m` over a base of dimension `n` is described by its
//! anchor coefficients `anchor[i][a]` (the `i`-th component of the vector
//! field `rho(e_a)`) and its structure functions `C[a][b][g]`, the
//! `g`-component of `[e_a, e_b]`. Sections and vector fields carry
//! expression coefficients over the base coordinates.

use std::fmt;

use crate::expr::sexpr::indexed_names;
use crate::expr::{simplify, Expr};
use crate::report::{sweep, CheckConfig, CheckRecord, Checked, VerificationReport};
use crate::sampling::halton_points;
use crate::{Error, Result};

/// A section `s = s^a e_a`.
#[derive(Debug, Clone, PartialEq)]
pub struct Section(pub Vec<Expr>);

impl Section {
    pub fn zero(rank: usize) -> Self {
        Section(vec![Expr::zero(); rank])
    }

    /// The constant basis section `e_a`.
    pub fn basis(rank: usize, a: usize) -> Self {
        let mut s = Section::zero(rank);
        s.0[a] = Expr::one();
        s
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn scale(&self, f: &Expr) -> Section {
        Section(self.0.iter().map(|c| simplify(&(f * c))).collect())
    }

    pub fn add(&self, other: &Section) -> Section {
        Section(self.0.iter().zip(&other.0).map(|(a, b)| simplify(&(a + b))).collect())
    }

    pub fn sub(&self, other: &Section) -> Section {
        Section(self.0.iter().zip(&other.0).map(|(a, b)| simplify(&(a - b))).collect())
    }

    pub fn simplified(&self) -> Section {
        Section(self.0.iter().map(simplify).collect())
    }

    pub fn eval(&self, pt: &[f64]) -> Result<Vec<f64>> {
        Ok(self.0.iter().map(|c| c.eval(pt)).collect::<Result<_, _>>()?)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Expr::is_zero)
    }
}

/// A vector field `v = v^i d/dx^i` on the base.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField(pub Vec<Expr>);

impl VectorField {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Directional derivative `v(f)`.
    pub fn apply(&self, f: &Expr) -> Expr {
        simplify(&Expr::sum(
            self.0
                .iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(i, c)| c * f.diff(i)),
        ))
    }

    /// Lie bracket of vector fields, `[v, w]^k = v(w^k) - w(v^k)`.
    pub fn bracket(&self, other: &VectorField) -> VectorField {
        VectorField(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(vk, wk)| simplify(&(self.apply(wk) - other.apply(vk))))
                .collect(),
        )
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        VectorField(self.0.iter().zip(&other.0).map(|(a, b)| simplify(&(a - b))).collect())
    }

    pub fn eval(&self, pt: &[f64]) -> Result<Vec<f64>> {
        Ok(self.0.iter().map(|c| c.eval(pt)).collect::<Result<_, _>>()?)
    }
}

/// A structure-function entry `C_{alpha beta}^gamma = expr` (0-based).
pub type StructureEntry = (usize, usize, usize, Expr);

#[derive(Debug, Clone, PartialEq)]
pub struct Algebroid {
    base_dim: usize,
    rank: usize,
    coords: Vec<String>,
    anchor: Vec<Vec<Expr>>,
    structure: Vec<Vec<Vec<Expr>>>,
    sample_box: Vec<[f64; 2]>,
}

/// A triple of sections with a printable label.
#[derive(Debug, Clone)]
pub struct SectionTriple {
    pub label: String,
    pub sections: [Section; 3],
}

impl Algebroid {
    /// Builds an algebroid from anchor rows (`anchor[i][a]`) and structure
    /// entries. Entries with `alpha > beta` are stored antisymmetrized;
    /// omitted entries are zero.
    pub fn new(
        anchor: Vec<Vec<Expr>>,
        structure: impl IntoIterator<Item = StructureEntry>,
        sample_box: Vec<[f64; 2]>,
    ) -> Result<Self> {
        let base_dim = anchor.len();
        let rank = anchor.first().map_or(0, Vec::len);
        if base_dim == 0 || rank == 0 {
            return Err(Error::Shape("base dimension and rank must be positive".into()));
        }
        if anchor.iter().any(|row| row.len() != rank) {
            return Err(Error::Shape("anchor rows must all have length equal to the rank".into()));
        }
        if sample_box.len() != base_dim {
            return Err(Error::Shape(format!(
                "sample box has {} intervals for a base of dimension {base_dim}",
                sample_box.len()
            )));
        }
        if sample_box.iter().any(|[lo, hi]| !(lo <= hi) || !lo.is_finite() || !hi.is_finite()) {
            return Err(Error::Shape("sample box intervals must be finite with lo <= hi".into()));
        }
        let mut c = vec![vec![vec![Expr::zero(); rank]; rank]; rank];
        let mut seen = vec![vec![vec![false; rank]; rank]; rank];
        for (a, b, g, e) in structure {
            if a >= rank || b >= rank || g >= rank {
                return Err(Error::Shape(format!("structure index ({a},{b},{g}) out of range")));
            }
            if a == b {
                if simplify(&e).is_zero() {
                    continue;
                }
                return Err(Error::Shape(format!("diagonal structure entry ({a},{a},{g}) must vanish")));
            }
            let (lo, hi, e) = if a < b { (a, b, e) } else { (b, a, -e) };
            if seen[lo][hi][g] {
                return Err(Error::Shape(format!("duplicate structure entry ({lo},{hi},{g})")));
            }
            seen[lo][hi][g] = true;
            let e = simplify(&e);
            c[hi][lo][g] = simplify(&-e.clone());
            c[lo][hi][g] = e;
        }
        let alg = Algebroid {
            base_dim,
            rank,
            coords: indexed_names("x", base_dim),
            anchor: anchor.into_iter().map(|r| r.iter().map(simplify).collect()).collect(),
            structure: c,
            sample_box,
        };
        alg.check_coefficients()?;
        Ok(alg)
    }

    fn check_coefficients(&self) -> Result<()> {
        let all = self
            .anchor
            .iter()
            .flatten()
            .chain(self.structure.iter().flatten().flatten());
        for e in all.clone() {
            if let Some(k) = e.max_var() {
                if k >= self.base_dim {
                    return Err(Error::Dimension(format!(
                        "coefficient {e} references coordinate {k} on a base of dimension {}",
                        self.base_dim
                    )));
                }
            }
        }
        let pts = self.samples(CheckConfig::default().samples);
        for e in all {
            for p in &pts {
                e.eval(p)?;
            }
        }
        Ok(())
    }

    pub fn with_coords(mut self, coords: Vec<String>) -> Result<Self> {
        if coords.len() != self.base_dim {
            return Err(Error::Shape(format!(
                "{} coordinate names for a base of dimension {}",
                coords.len(),
                self.base_dim
            )));
        }
        self.coords = coords;
        Ok(self)
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn sample_box(&self) -> &[[f64; 2]] {
        &self.sample_box
    }

    /// `rho_a^i`.
    pub fn anchor_coeff(&self, i: usize, a: usize) -> &Expr {
        &self.anchor[i][a]
    }

    pub fn anchor_rows(&self) -> &[Vec<Expr>] {
        &self.anchor
    }

    /// `C_{ab}^g`.
    pub fn structure_fn(&self, a: usize, b: usize, g: usize) -> &Expr {
        &self.structure[a][b][g]
    }

    /// Nonzero entries with `a < b`.
    pub fn structure_entries(&self) -> Vec<StructureEntry> {
        let mut out = Vec::new();
        for a in 0..self.rank {
            for b in a + 1..self.rank {
                for g in 0..self.rank {
                    let e = &self.structure[a][b][g];
                    if !e.is_zero() {
                        out.push((a, b, g, e.clone()));
                    }
                }
            }
        }
        out
    }

    pub fn samples(&self, count: usize) -> Vec<Vec<f64>> {
        halton_points(&self.sample_box, count)
    }

    fn check_section(&self, s: &Section) -> Result<()> {
        if s.rank() != self.rank {
            return Err(Error::RankMismatch { expected: self.rank, got: s.rank() });
        }
        Ok(())
    }

    /// `rho(s)`, with `v^i = rho_a^i s^a`.
    pub fn anchor_apply(&self, s: &Section) -> Result<VectorField> {
        self.check_section(s)?;
        Ok(VectorField(
            self.anchor
                .iter()
                .map(|row| {
                    simplify(&Expr::sum(
                        row.iter()
                            .zip(&s.0)
                            .filter(|(r, c)| !r.is_zero() && !c.is_zero())
                            .map(|(r, c)| r * c),
                    ))
                })
                .collect(),
        ))
    }

    /// `[s1, s2]^g = s1^a s2^b C_{ab}^g + rho(s1)(s2^g) - rho(s2)(s1^g)`.
    pub fn bracket(&self, s1: &Section, s2: &Section) -> Result<Section> {
        self.check_section(s1)?;
        self.check_section(s2)?;
        let v1 = self.anchor_apply(s1)?;
        let v2 = self.anchor_apply(s2)?;
        let mut pairs = Vec::new();
        for a in 0..self.rank {
            for b in 0..self.rank {
                if a != b && !s1.0[a].is_zero() && !s2.0[b].is_zero() {
                    pairs.push((a, b, &s1.0[a] * &s2.0[b]));
                }
            }
        }
        let coeffs = (0..self.rank)
            .map(|g| {
                let algebraic = pairs
                    .iter()
                    .filter(|(a, b, _)| !self.structure[*a][*b][g].is_zero())
                    .map(|(a, b, w)| w * &self.structure[*a][*b][g]);
                let differential = [v1.apply(&s2.0[g]), -v2.apply(&s1.0[g])];
                simplify(&Expr::sum(algebraic.chain(differential)))
            })
            .collect();
        Ok(Section(coeffs))
    }

    /// `rho(s)(f)`.
    pub fn lie_derivative_fn(&self, s: &Section, f: &Expr) -> Result<Expr> {
        Ok(self.anchor_apply(s)?.apply(f))
    }

    /// The cyclic sum `[s1,[s2,s3]] + [s2,[s3,s1]] + [s3,[s1,s2]]`.
    pub fn jacobiator(&self, s1: &Section, s2: &Section, s3: &Section) -> Result<Section> {
        let t1 = self.bracket(s1, &self.bracket(s2, s3)?)?;
        let t2 = self.bracket(s2, &self.bracket(s3, s1)?)?;
        let t3 = self.bracket(s3, &self.bracket(s1, s2)?)?;
        Ok(t1.add(&t2).add(&t3))
    }

    /// Sampled residual of `[s1, f s2] - (f [s1, s2] + rho(s1)(f) s2)`.
    pub fn check_leibniz(&self, s1: &Section, f: &Expr, s2: &Section, cfg: &CheckConfig) -> Result<CheckRecord> {
        let pts = self.samples(cfg.samples);
        let site = ((), ());
        sweep("leibniz", std::slice::from_ref(&site), &pts, cfg.tol, |_| {
            Ok(("(s1, f, s2)".to_string(), self.leibniz_residual(s1, f, s2)?.0))
        })
    }

    fn leibniz_residual(&self, s1: &Section, f: &Expr, s2: &Section) -> Result<Section> {
        let lhs = self.bracket(s1, &s2.scale(f))?;
        let rhs = self
            .bracket(s1, s2)?
            .scale(f)
            .add(&s2.scale(&self.lie_derivative_fn(s1, f)?));
        Ok(lhs.sub(&rhs))
    }

    /// Leibniz check over seeded random polynomial triples `(s1, f, s2)`.
    pub fn check_leibniz_random(&self, count: usize, cfg: &CheckConfig) -> Result<CheckRecord> {
        let mut rng = crate::random::rng(cfg.seed);
        let (n, m) = (self.base_dim, self.rank);
        let sites: Vec<(usize, Section, Expr, Section)> = (0..count)
            .map(|k| {
                let s1 = crate::random::section(&mut rng, n, m);
                let f = crate::random::polynomial(&mut rng, n);
                let s2 = crate::random::section(&mut rng, n, m);
                (k, s1, f, s2)
            })
            .collect();
        let pts = self.samples(cfg.samples);
        sweep("leibniz", &sites, &pts, cfg.tol, |(k, s1, f, s2)| {
            Ok((format!("random triple #{k}"), self.leibniz_residual(s1, f, s2)?.0))
        })
    }

    /// Basis triples `(e_a, e_b, e_c)` with `a < b < c`, then the weighted
    /// triples `(e_a, e_b, x^i e_a)` with `a < b`. The latter detect brackets
    /// whose Jacobiator is not tensorial, which basis triples alone miss.
    pub fn default_jacobi_triples(&self) -> Vec<SectionTriple> {
        let m = self.rank;
        let e = |a| Section::basis(m, a);
        let mut out = Vec::new();
        for a in 0..m {
            for b in a + 1..m {
                for c in b + 1..m {
                    out.push(SectionTriple {
                        label: format!("(e{},e{},e{})", a + 1, b + 1, c + 1),
                        sections: [e(a), e(b), e(c)],
                    });
                }
            }
        }
        for a in 0..m {
            for b in a + 1..m {
                for i in 0..self.base_dim {
                    out.push(SectionTriple {
                        label: format!("(e{},e{},{}*e{})", a + 1, b + 1, self.coords[i], a + 1),
                        sections: [e(a), e(b), e(a).scale(&Expr::var(i))],
                    });
                }
            }
        }
        out
    }

    pub fn check_jacobi(&self, triples: &[SectionTriple], cfg: &CheckConfig) -> Result<CheckRecord> {
        let pts = self.samples(cfg.samples);
        sweep("jacobi", triples, &pts, cfg.tol, |t| {
            let [s1, s2, s3] = &t.sections;
            Ok((t.label.clone(), self.jacobiator(s1, s2, s3)?.0))
        })
    }

    pub fn check_jacobi_default(&self, cfg: &CheckConfig) -> Result<CheckRecord> {
        self.check_jacobi(&self.default_jacobi_triples(), cfg)
    }

    /// Sampled residual of `rho([s1, s2]) - [rho(s1), rho(s2)]`.
    pub fn check_anchor_bracket_compat(&self, s1: &Section, s2: &Section, cfg: &CheckConfig) -> Result<CheckRecord> {
        let pts = self.samples(cfg.samples);
        sweep("anchor_bracket", &[(s1, s2)], &pts, cfg.tol, |(a, b)| {
            Ok(("(s1, s2)".to_string(), self.anchor_bracket_residual(a, b)?.0))
        })
    }

    fn anchor_bracket_residual(&self, s1: &Section, s2: &Section) -> Result<VectorField> {
        let lhs = self.anchor_apply(&self.bracket(s1, s2)?)?;
        let rhs = self.anchor_apply(s1)?.bracket(&self.anchor_apply(s2)?);
        Ok(lhs.sub(&rhs))
    }

    /// Anchor compatibility on all basis pairs. Both sides are tensorial in
    /// each argument, so basis pairs decide the identity.
    pub fn check_anchor_bracket_default(&self, cfg: &CheckConfig) -> Result<CheckRecord> {
        let m = self.rank;
        let pairs: Vec<(usize, usize)> = (0..m).flat_map(|a| (a + 1..m).map(move |b| (a, b))).collect();
        let pts = self.samples(cfg.samples);
        sweep("anchor_bracket", &pairs, &pts, cfg.tol, |&(a, b)| {
            let r = self.anchor_bracket_residual(&Section::basis(m, a), &Section::basis(m, b))?;
            Ok((format!("(e{},e{})", a + 1, b + 1), r.0))
        })
    }
}

impl fmt::Display for Algebroid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use crate::expr::sexpr::to_sexpr;
        writeln!(f, "base dimension {}, rank {}", self.base_dim, self.rank)?;
        writeln!(f, "coordinates: {}", self.coords.join(" "))?;
        for a in 0..self.rank {
            let comps: Vec<String> = (0..self.base_dim)
                .map(|i| to_sexpr(&self.anchor[i][a], &self.coords))
                .collect();
            writeln!(f, "rho(e{}) = [{}]", a + 1, comps.join(", "))?;
        }
        let entries = self.structure_entries();
        if entries.is_empty() {
            writeln!(f, "structure functions: all zero")?;
        }
        for (a, b, g, e) in entries {
            writeln!(f, "C[{},{}]^{} = {}", a + 1, b + 1, g + 1, to_sexpr(&e, &self.coords))?;
        }
        Ok(())
    }
}

/// `[lo, hi]` in every coordinate.
pub fn uniform_box(n: usize, lo: f64, hi: f64) -> Vec<[f64; 2]> {
    vec![[lo, hi]; n]
}

/// `TM` over `R^n`: identity anchor, vanishing structure functions.
pub fn tangent_algebroid(n: usize, sample_box: Vec<[f64; 2]>) -> Result<Algebroid> {
    if n == 0 {
        return Err(Error::Shape("tangent algebroid needs n >= 1".into()));
    }
    let anchor = (0..n)
        .map(|i| (0..n).map(|a| Expr::constant(if i == a { 1.0 } else { 0.0 })).collect())
        .collect();
    Algebroid::new(anchor, Vec::new(), sample_box)
}

fn column(matrix: &[Vec<Expr>], a: usize) -> Vec<Expr> {
    matrix.iter().map(|row| row[a].clone()).collect()
}

fn apply_matrix(matrix: &[Vec<Expr>], v: &VectorField) -> VectorField {
    VectorField(
        matrix
            .iter()
            .map(|row| simplify(&Expr::sum(row.iter().zip(&v.0).map(|(a, b)| a * b))))
            .collect(),
    )
}

/// Nijenhuis torsion `[NX,NY] - N([NX,Y] + [X,NY] - N[X,Y])` on all pairs
/// of coordinate fields.
pub fn check_nijenhuis(tensor: &[Vec<Expr>], sample_box: &[[f64; 2]], cfg: &CheckConfig) -> Result<CheckRecord> {
    let n = tensor.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let pts = halton_points(sample_box, cfg.samples);
    sweep("nijenhuis_torsion", &pairs, &pts, cfg.tol, |&(a, b)| {
        let unit = |k: usize| VectorField((0..n).map(|i| Expr::constant(if i == k { 1.0 } else { 0.0 })).collect());
        let (x, y) = (unit(a), unit(b));
        let nx = VectorField(column(tensor, a));
        let ny = VectorField(column(tensor, b));
        let inner = nx
            .bracket(&y)
            .0
            .iter()
            .zip(&x.bracket(&ny).0)
            .map(|(p, q)| simplify(&(p + q)))
            .collect::<Vec<_>>();
        // [X, Y] vanishes for coordinate fields.
        let torsion = nx.bracket(&ny).sub(&apply_matrix(tensor, &VectorField(inner)));
        Ok((format!("(d/d{}, d/d{})", a + 1, b + 1), torsion.0))
    })
}

/// `(TM, [.,.]_N, N)` for a (1,1)-tensor `N` given as `tensor[i][j] = N^i_j`.
/// The structure functions are `C_{ab}^g = d_a N^g_b - d_b N^g_a`. The
/// Nijenhuis torsion is checked by sampling and reported with the result.
pub fn nijenhuis_algebroid(
    tensor: Vec<Vec<Expr>>,
    sample_box: Vec<[f64; 2]>,
    cfg: &CheckConfig,
) -> Result<Checked<Algebroid>> {
    let n = tensor.len();
    if n == 0 || tensor.iter().any(|r| r.len() != n) {
        return Err(Error::Shape("Nijenhuis tensor must be a nonempty square matrix".into()));
    }
    let mut entries = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            for g in 0..n {
                let c = simplify(&(tensor[g][b].diff(a) - tensor[g][a].diff(b)));
                if !c.is_zero() {
                    entries.push((a, b, g, c));
                }
            }
        }
    }
    let torsion = check_nijenhuis(&tensor, &sample_box, cfg)?;
    let value = Algebroid::new(tensor, entries, sample_box)?;
    let mut report = VerificationReport::new(cfg.tol);
    report.push(torsion);
    Ok(Checked { value, report })
}

/// `(T*M, [.,.]_Lambda, Lambda#)` for a bivector `lambda[i][j] = Lambda^{ij}`.
///
/// The anchor sends `dx^a` to `Lambda^{ai} d/dx^i` and the bracket of
/// coordinate differentials is `[dx^a, dx^b] = d(Lambda^{ab})`, so that
/// `C_{ab}^g = d_g Lambda^{ab}`. The Jacobi identity and anchor
/// compatibility hold exactly when `Lambda` is Poisson; both are sampled and
/// reported with the result.
pub fn poisson_cotangent_algebroid(
    lambda: Vec<Vec<Expr>>,
    sample_box: Vec<[f64; 2]>,
    cfg: &CheckConfig,
) -> Result<Checked<Algebroid>> {
    let n = lambda.len();
    if n == 0 || lambda.iter().any(|r| r.len() != n) {
        return Err(Error::Shape("Poisson bivector must be a nonempty square matrix".into()));
    }
    for i in 0..n {
        for j in i..n {
            if !simplify(&(&lambda[i][j] + &lambda[j][i])).is_zero() {
                return Err(Error::Shape(format!(
                    "bivector is not antisymmetric at ({}, {})",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    let anchor = (0..n)
        .map(|i| (0..n).map(|a| lambda[a][i].clone()).collect())
        .collect();
    let mut entries = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            for g in 0..n {
                let c = simplify(&lambda[a][b].diff(g));
                if !c.is_zero() {
                    entries.push((a, b, g, c));
                }
            }
        }
    }
    let value = Algebroid::new(anchor, entries, sample_box)?;
    let mut report = VerificationReport::new(cfg.tol);
    report.push(value.check_jacobi_default(cfg)?);
    report.push(value.check_anchor_bracket_default(cfg)?);
    Ok(Checked { value, report })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(i: usize) -> Expr {
        Expr::var(i)
    }

    fn c(v: f64) -> Expr {
        Expr::constant(v)
    }

    fn half_radius() -> Expr {
        (x(0).powi(2) + x(1).powi(2)) / c(2.0)
    }

    fn n1() -> Vec<Vec<Expr>> {
        vec![vec![half_radius(), c(0.0)], vec![c(0.0), half_radius()]]
    }

    fn cfg() -> CheckConfig {
        CheckConfig::default()
    }

    /// `[V, W](p) = DW(p) V(p) - DV(p) W(p)` by central differences of
    /// plain closures, independent of symbolic differentiation.
    fn fd_bracket(
        v: &dyn Fn(&[f64]) -> Vec<f64>,
        w: &dyn Fn(&[f64]) -> Vec<f64>,
        p: &[f64],
    ) -> Vec<f64> {
        let h = 1e-5;
        let dir = |f: &dyn Fn(&[f64]) -> Vec<f64>, d: &[f64]| -> Vec<f64> {
            let plus: Vec<f64> = p.iter().zip(d).map(|(a, b)| a + h * b).collect();
            let minus: Vec<f64> = p.iter().zip(d).map(|(a, b)| a - h * b).collect();
            f(&plus).iter().zip(f(&minus)).map(|(a, b)| (a - b) / (2.0 * h)).collect()
        };
        let dw_v = dir(w, &v(p));
        let dv_w = dir(v, &w(p));
        dw_v.iter().zip(dv_w).map(|(a, b)| a - b).collect()
    }

    #[test]
    fn rejects_degenerate_shapes() {
        assert!(Algebroid::new(vec![], vec![], vec![]).is_err());
        assert!(Algebroid::new(vec![vec![]], vec![], vec![[0.0, 1.0]]).is_err());
        assert!(tangent_algebroid(0, vec![]).is_err());
        let bad_box = tangent_algebroid(2, vec![[0.0, 1.0]]);
        assert!(matches!(bad_box, Err(Error::Shape(_))));
    }

    #[test]
    fn rejects_sample_box_in_singular_set() {
        let anchor = vec![vec![x(0).ln()]];
        let err = Algebroid::new(anchor, vec![], vec![[-1.0, 1.0]]).unwrap_err();
        assert!(err.is_domain());
        let anchor = vec![vec![x(0).ln()]];
        assert!(Algebroid::new(anchor, vec![], vec![[0.5, 1.0]]).is_ok());
    }

    #[test]
    fn structure_is_antisymmetrized() {
        let alg = Algebroid::new(
            vec![vec![c(1.0), c(0.0)], vec![c(0.0), c(1.0)]],
            vec![(1, 0, 0, x(0))],
            uniform_box(2, -1.0, 1.0),
        )
        .unwrap();
        assert_eq!(alg.structure_fn(0, 1, 0), &simplify(&-x(0)));
        assert_eq!(alg.structure_fn(1, 0, 0), &x(0));
        assert!(alg.structure_fn(0, 0, 0).is_zero());
    }

    #[test]
    fn tangent_anchor_is_identity() {
        let t = tangent_algebroid(2, uniform_box(2, -1.0, 1.0)).unwrap();
        let v = t.anchor_apply(&Section::basis(2, 0)).unwrap();
        assert_eq!(v.0, vec![c(1.0), c(0.0)]);
        assert!(t.structure_entries().is_empty());
        let t1 = tangent_algebroid(1, uniform_box(1, -1.0, 1.0)).unwrap();
        assert_eq!(t1.anchor_coeff(0, 0), &c(1.0));
        assert!(t.check_jacobi_default(&cfg()).unwrap().pass);
    }

    #[test]
    fn anchor_of_zero_section_is_zero() {
        let alg = nijenhuis_algebroid(n1(), uniform_box(2, -1.5, 1.5), &cfg()).unwrap().value;
        let v = alg.anchor_apply(&Section::zero(2)).unwrap();
        assert!(v.0.iter().all(Expr::is_zero));
        assert!(matches!(
            alg.anchor_apply(&Section::zero(3)),
            Err(Error::RankMismatch { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn nijenhuis_anchor_at_unit_point() {
        let alg = nijenhuis_algebroid(n1(), uniform_box(2, -1.5, 1.5), &cfg()).unwrap().value;
        let v = alg.anchor_apply(&Section::basis(2, 0)).unwrap();
        assert_eq!(v.eval(&[1.0, 1.0]).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn tangent_bracket_matches_difference_oracle() {
        let t = tangent_algebroid(2, uniform_box(2, -2.0, 2.0)).unwrap();
        let s1 = Section(vec![x(0), c(0.0)]);
        let s2 = Section(vec![c(0.0), x(0)]);
        let b = t.bracket(&s1, &s2).unwrap();
        assert_eq!(b, Section(vec![c(0.0), x(0)]));
        let v = |p: &[f64]| vec![p[0], 0.0];
        let w = |p: &[f64]| vec![0.0, p[0]];
        for p in t.samples(20) {
            let oracle = fd_bracket(&v, &w, &p);
            let got = b.eval(&p).unwrap();
            for (g, o) in got.iter().zip(&oracle) {
                assert!((g - o).abs() < 1e-6, "{got:?} vs {oracle:?}");
            }
        }
    }

    #[test]
    fn nijenhuis_basis_bracket_matches_rotation_field() {
        let alg = nijenhuis_algebroid(n1(), uniform_box(2, -1.5, 1.5), &cfg()).unwrap().value;
        let b = alg.bracket(&Section::basis(2, 0), &Section::basis(2, 1)).unwrap();
        assert_eq!(b.eval(&[1.0, 0.0]).unwrap(), vec![0.0, 1.0]);
        // -y e_x + x e_y everywhere
        for p in alg.samples(16) {
            assert_eq!(b.eval(&p).unwrap(), vec![-p[1], p[0]]);
        }
    }

    #[test]
    fn self_bracket_vanishes() {
        let alg = nijenhuis_algebroid(n1(), uniform_box(2, -1.5, 1.5), &cfg()).unwrap().value;
        let mut rng = crate::random::rng(3);
        for _ in 0..5 {
            let s = crate::random::section(&mut rng, 2, 2);
            assert!(alg.bracket(&s, &s).unwrap().is_zero());
        }
    }

    #[test]
    fn leibniz_holds_and_trivial_function() {
        let t = tangent_algebroid(2, uniform_box(2, -1.0, 1.0)).unwrap();
        let s1 = Section(vec![x(0) * x(1), c(2.0)]);
        let s2 = Section(vec![x(1), x(0) - c(1.0)]);
        let rec = t.check_leibniz(&s1, &x(0), &s2, &cfg()).unwrap();
        assert!(rec.pass && rec.max_residual < 1e-9);
        let rec = t.check_leibniz(&s1, &c(1.0), &s2, &cfg()).unwrap();
        assert_eq!(rec.max_residual, 0.0);
    }

    fn corrupted_nijenhuis() -> Algebroid {
        let good = nijenhuis_algebroid(n1(), uniform_box(2, -1.5, 1.5), &cfg()).unwrap().value;
        let mut entries = good.structure_entries();
        entries[0].3 = simplify(&(&entries[0].3 + c(1.0)));
        Algebroid::new(good.anchor_rows().to_vec(), entries, good.sample_box().to_vec()).unwrap()
    }

    #[test]
    fn leibniz_is_structural_but_anchor_compat_catches_corruption() {
        // The bracket is built from the coordinate formula, so Leibniz holds
        // even for a corrupted table; the corruption shows up elsewhere.
        let bad = corrupted_nijenhuis();
        assert!(bad.check_leibniz_random(5, &cfg()).unwrap().pass);
        let rec = bad.check_anchor_bracket_default(&cfg()).unwrap();
        assert!(!rec.pass);
        assert_eq!(rec.site, "(e1,e2)");
        assert!(rec.max_residual > 1e-3);
    }

    fn almost_algebroid() -> Algebroid {
        Algebroid::new(
            vec![vec![c(1.0), c(0.0)], vec![c(0.0), c(1.0)]],
            vec![(0, 1, 0, x(0))],
            uniform_box(2, -1.5, 1.5),
        )
        .unwrap()
    }

    #[test]
    fn jacobiator_vanishes_on_tangent_coordinate_sections() {
        let t = tangent_algebroid(3, uniform_box(3, -1.0, 1.0)).unwrap();
        let s: Vec<Section> = (0..3).map(|a| Section::basis(3, a).scale(&x(a))).collect();
        assert!(t.jacobiator(&s[0], &s[1], &s[2]).unwrap().is_zero());
    }

    #[test]
    fn almost_algebroid_jacobi_fails_on_weighted_triple() {
        let alg = almost_algebroid();
        let (e1, e2) = (Section::basis(2, 0), Section::basis(2, 1));
        let j = alg.jacobiator(&e1, &e2, &e1.scale(&x(0))).unwrap();
        // Brute force: [e1,e2] = x e1, so J = -x^2 e1 + ... nonzero somewhere.
        let worst = alg
            .samples(64)
            .iter()
            .map(|p| j.eval(p).unwrap()[0].abs())
            .fold(0.0, f64::max);
        assert!(worst > 1e-3);
        let rec = alg.check_jacobi_default(&cfg()).unwrap();
        assert!(!rec.pass);
        assert!(rec.site.contains("*e1"), "{}", rec.site);
    }

    #[test]
    fn nijenhuis_scalar_multiple_of_identity_passes_jacobi() {
        let alg = nijenhuis_algebroid(n1(), uniform_box(2, -1.5, 1.5), &cfg()).unwrap();
        assert!(!alg.is_flagged());
        let rec = alg.value.check_jacobi_default(&cfg()).unwrap();
        assert!(rec.pass, "{rec:?}");
        assert!(alg.value.check_anchor_bracket_default(&cfg()).unwrap().pass);
    }

    #[test]
    fn doubled_anchor_breaks_compatibility() {
        let good = nijenhuis_algebroid(n1(), uniform_box(2, -1.5, 1.5), &cfg()).unwrap().value;
        let doubled: Vec<Vec<Expr>> = good
            .anchor_rows()
            .iter()
            .map(|r| r.iter().map(|e| c(2.0) * e).collect())
            .collect();
        let bad = Algebroid::new(doubled, good.structure_entries(), good.sample_box().to_vec()).unwrap();
        let rec = bad.check_anchor_bracket_default(&cfg()).unwrap();
        assert!(!rec.pass && rec.max_residual > 1e-3);
    }

    #[test]
    fn identity_tensor_gives_tangent() {
        let id = vec![vec![c(1.0), c(0.0)], vec![c(0.0), c(1.0)]];
        let alg = nijenhuis_algebroid(id, uniform_box(2, -1.0, 1.0), &cfg()).unwrap();
        assert!(alg.value.structure_entries().is_empty());
        assert!(!alg.is_flagged());
    }

    #[test]
    fn diagonal_tensor_is_nijenhuis() {
        let n = vec![vec![x(0), c(0.0)], vec![c(0.0), x(1)]];
        let alg = nijenhuis_algebroid(n, uniform_box(2, -1.0, 1.0), &cfg()).unwrap();
        assert!(!alg.is_flagged(), "{:?}", alg.report);
        assert!(alg.value.check_jacobi_default(&cfg()).unwrap().pass);
    }

    #[test]
    fn non_nijenhuis_tensor_is_flagged() {
        // N = [[0, x2], [0, 0]]: torsion [N d1, N d2] - ... is nonzero.
        let n = vec![vec![c(0.0), x(1).powi(2)], vec![x(0), c(0.0)]];
        let alg = nijenhuis_algebroid(n, uniform_box(2, 0.5, 1.5), &cfg()).unwrap();
        assert!(alg.is_flagged());
    }

    #[test]
    fn poisson_constant_symplectic() {
        let lambda = vec![vec![c(0.0), c(1.0)], vec![c(-1.0), c(0.0)]];
        let alg = poisson_cotangent_algebroid(lambda, uniform_box(2, -1.0, 1.0), &cfg()).unwrap();
        assert!(!alg.is_flagged());
        assert!(alg.value.structure_entries().is_empty());
        // rho(dx^1) = Lambda^{1i} d/dx^i = d/dx^2
        assert_eq!(alg.value.anchor_apply(&Section::basis(2, 0)).unwrap().0, vec![c(0.0), c(1.0)]);
    }

    #[test]
    fn poisson_linear_in_plane() {
        let lambda = vec![vec![c(0.0), x(0)], vec![-x(0), c(0.0)]];
        let alg = poisson_cotangent_algebroid(lambda, uniform_box(2, -1.0, 1.0), &cfg()).unwrap();
        assert_eq!(alg.value.structure_fn(0, 1, 0), &c(1.0));
        assert!(!alg.is_flagged(), "{:?}", alg.report);
    }

    #[test]
    fn poisson_rejects_non_antisymmetric() {
        let lambda = vec![vec![c(0.0), x(0)], vec![x(0), c(0.0)]];
        assert!(poisson_cotangent_algebroid(lambda, uniform_box(2, -1.0, 1.0), &cfg()).is_err());
    }

    #[test]
    fn non_poisson_bivector_fails_jacobi() {
        // Lambda^{12}=x3, Lambda^{13}=x1, Lambda^{23}=x2: the Schouten bracket
        // [Lambda, Lambda] has the nonzero component 2 x3, so Jacobi must fail.
        let z = c(0.0);
        let lambda = vec![
            vec![z.clone(), x(2), x(0)],
            vec![-x(2), z.clone(), x(1)],
            vec![-x(0), -x(1), z],
        ];
        let alg = poisson_cotangent_algebroid(lambda, uniform_box(3, -1.0, 1.0), &cfg()).unwrap();
        assert!(alg.is_flagged());
        let jac = alg.report.find("jacobi").unwrap();
        assert!(!jac.pass && jac.max_residual > 1e-3);
    }
}
