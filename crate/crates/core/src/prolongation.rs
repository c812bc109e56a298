//! Prolongation of an algebroid `E -> M` along a trivial fibration
//! `P = M x R^q -> M`.
//!
//! The prolonged bundle has fibers `{(b, v) : rho(b) = T nu(v)}` and the
//! adapted basis `X_a = (e_a, rho_a^i d/dx^i)`, `V_A = (0, d/du^A)`. In that
//! basis the anchor is block diagonal `[rho, Id_q]` and the structure
//! functions are those of `E`, lifted to be independent of `u`.

use crate::algebroid::{Algebroid, Section, VectorField};
use crate::calculus::BundleMorphism;
use crate::expr::sexpr::indexed_names;
use crate::expr::{simplify, Expr};
use crate::report::{sampled_residual, CheckConfig, CheckRecord, Checked, VerificationReport};
use crate::{Error, Result};

/// Coordinate projection `(x^1..x^n, u^1..u^q) -> (x^1..x^n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Fibration {
    base_dim: usize,
    fiber_dim: usize,
    fiber_names: Vec<String>,
    fiber_box: Vec<[f64; 2]>,
}

impl Fibration {
    pub fn new(base_dim: usize, fiber_dim: usize) -> Result<Self> {
        if fiber_dim == 0 {
            return Err(Error::Dimension("fibration needs at least one fiber coordinate".into()));
        }
        Ok(Fibration {
            base_dim,
            fiber_dim,
            fiber_names: indexed_names("u", fiber_dim),
            fiber_box: vec![[-1.0, 1.0]; fiber_dim],
        })
    }

    /// Fibration over the base of `alg`.
    pub fn over(alg: &Algebroid, fiber_dim: usize) -> Result<Self> {
        Fibration::new(alg.base_dim(), fiber_dim)
    }

    pub fn with_fiber_box(mut self, fiber_box: Vec<[f64; 2]>) -> Result<Self> {
        if fiber_box.len() != self.fiber_dim {
            return Err(Error::Shape("fiber box length differs from the fiber dimension".into()));
        }
        self.fiber_box = fiber_box;
        Ok(self)
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn fiber_dim(&self) -> usize {
        self.fiber_dim
    }

    pub fn total_dim(&self) -> usize {
        self.base_dim + self.fiber_dim
    }

    pub fn fiber_names(&self) -> &[String] {
        &self.fiber_names
    }

    pub fn fiber_box(&self) -> &[[f64; 2]] {
        &self.fiber_box
    }
}

fn check_fits(alg: &Algebroid, fib: &Fibration) -> Result<()> {
    if alg.base_dim() != fib.base_dim {
        return Err(Error::Dimension(format!(
            "algebroid over R^{} cannot be prolonged along a fibration over R^{}",
            alg.base_dim(),
            fib.base_dim
        )));
    }
    Ok(())
}

/// The prolonged algebroid over `P`, in the basis `{X_a, V_A}`.
pub fn prolong(alg: &Algebroid, fib: &Fibration) -> Result<Algebroid> {
    check_fits(alg, fib)?;
    let (n, m, q) = (alg.base_dim(), alg.rank(), fib.fiber_dim);
    let mut anchor = vec![vec![Expr::zero(); m + q]; n + q];
    for (i, row) in alg.anchor_rows().iter().enumerate() {
        anchor[i][..m].clone_from_slice(row);
    }
    for k in 0..q {
        anchor[n + k][m + k] = Expr::one();
    }
    let mut sample_box = alg.sample_box().to_vec();
    sample_box.extend_from_slice(&fib.fiber_box);
    let mut coords = alg.coords().to_vec();
    coords.extend(fib.fiber_names.iter().cloned());
    Algebroid::new(anchor, alg.structure_entries(), sample_box)?.with_coords(coords)
}

/// A point `(b, v)` of the prolonged fiber over `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProlongedElement {
    pub p: Vec<f64>,
    pub b: Vec<f64>,
    pub v: Vec<f64>,
}

/// The element over `p` with `E`-part `b` whose tangent vector has the
/// given fiber part; its base part is solved from `rho(b)`.
pub fn make_element(
    alg: &Algebroid,
    fib: &Fibration,
    p: &[f64],
    b: &[f64],
    v_fiber: &[f64],
) -> Result<ProlongedElement> {
    check_fits(alg, fib)?;
    if p.len() != fib.total_dim() || b.len() != alg.rank() || v_fiber.len() != fib.fiber_dim {
        return Err(Error::Shape("point, fiber vector or vertical part has the wrong length".into()));
    }
    let mut v = anchor_at(alg, &p[..fib.base_dim], b)?;
    v.extend_from_slice(v_fiber);
    Ok(ProlongedElement { p: p.to_vec(), b: b.to_vec(), v })
}

fn anchor_at(alg: &Algebroid, x: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    alg.anchor_rows()
        .iter()
        .map(|row| {
            row.iter()
                .zip(b)
                .try_fold(0.0, |acc, (r, c)| Ok(acc + r.eval(x)? * c))
        })
        .collect()
}

/// Coefficients `(z^a, v^A)` of `z = z^a X_a(p) + v^A V_A(p)`.
pub fn decompose(alg: &Algebroid, fib: &Fibration, z: &ProlongedElement) -> Result<(Vec<f64>, Vec<f64>)> {
    check_fits(alg, fib)?;
    let n = fib.base_dim;
    if z.p.len() != fib.total_dim() || z.b.len() != alg.rank() || z.v.len() != fib.total_dim() {
        return Err(Error::Shape("element components have the wrong length".into()));
    }
    let rho_b = anchor_at(alg, &z.p[..n], &z.b)?;
    let residual = rho_b
        .iter()
        .zip(&z.v[..n])
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if !(residual < 1e-9) {
        return Err(Error::ConstraintViolation { residual });
    }
    Ok((z.b.clone(), z.v[n..].to_vec()))
}

/// A projectable section `p -> (sigma(nu(p)), U(p))`: `sigma` is a section
/// of `E` over the base and `U` a vector field on `P` projecting to
/// `rho(sigma)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectableSection {
    pub sigma: Section,
    pub field: VectorField,
}

impl ProjectableSection {
    /// `X_a` as a projectable section.
    pub fn basis_x(alg: &Algebroid, fib: &Fibration, a: usize) -> Result<Self> {
        let sigma = Section::basis(alg.rank(), a);
        let mut field = alg.anchor_apply(&sigma)?.0;
        field.resize(fib.total_dim(), Expr::zero());
        Ok(ProjectableSection { sigma, field: VectorField(field) })
    }

    /// `V_A` as a projectable section.
    pub fn basis_v(alg: &Algebroid, fib: &Fibration, k: usize) -> Self {
        let mut field = vec![Expr::zero(); fib.total_dim()];
        field[fib.base_dim + k] = Expr::one();
        ProjectableSection { sigma: Section::zero(alg.rank()), field: VectorField(field) }
    }

    /// Coefficients in the adapted basis `{X_a, V_A}` of the prolonged
    /// algebroid: `sigma` followed by the vertical part of `U`.
    pub fn to_prolonged(&self, fib: &Fibration) -> Section {
        let mut comps = self.sigma.0.clone();
        comps.extend(self.field.0[fib.base_dim..].iter().cloned());
        Section(comps)
    }
}

fn check_projectable(alg: &Algebroid, fib: &Fibration, z: &ProjectableSection, tol: f64, samples: usize) -> Result<()> {
    let n = fib.base_dim;
    if z.sigma.rank() != alg.rank() || z.field.dim() != fib.total_dim() {
        return Err(Error::Shape("projectable section has the wrong shape".into()));
    }
    if z.sigma.0.iter().filter_map(Expr::max_var).any(|k| k >= n) {
        return Err(Error::NotProjectable("sigma depends on fiber coordinates".into()));
    }
    let rho = alg.anchor_apply(&z.sigma)?;
    let diff: Vec<Expr> = z.field.0[..n].iter().zip(&rho.0).map(|(u, r)| simplify(&(u - r))).collect();
    let mut bounds = alg.sample_box().to_vec();
    bounds.extend_from_slice(&fib.fiber_box);
    let pts = crate::sampling::halton_points(&bounds, samples);
    let (r, at) = sampled_residual(&diff, &pts)?;
    if r >= tol {
        return Err(Error::NotProjectable(format!(
            "horizontal part of U differs from rho(sigma) by {r:e} at {:?}",
            at.unwrap_or_default()
        )));
    }
    Ok(())
}

/// `[Z1, Z2] = ([sigma1, sigma2], [U1, U2])` for projectable sections.
pub fn projectable_bracket(
    alg: &Algebroid,
    fib: &Fibration,
    z1: &ProjectableSection,
    z2: &ProjectableSection,
    cfg: &CheckConfig,
) -> Result<ProjectableSection> {
    check_fits(alg, fib)?;
    check_projectable(alg, fib, z1, cfg.tol, cfg.samples)?;
    check_projectable(alg, fib, z2, cfg.tol, cfg.samples)?;
    Ok(ProjectableSection {
        sigma: alg.bracket(&z1.sigma, &z2.sigma)?,
        field: z1.field.bracket(&z2.field),
    })
}

/// A map `Psi: P -> P'` given by `n' + q'` expressions in `(x, u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberedMap(pub Vec<Expr>);

impl FiberedMap {
    /// `(x, u) -> (phi(x), u, 0, ..)` for a base map `phi` and `q <= q'`.
    pub fn product(base_map: &[Expr], source: &Fibration, target_fiber_dim: usize) -> Self {
        let n = source.base_dim;
        let mut comps = base_map.to_vec();
        comps.extend((0..target_fiber_dim).map(|k| {
            if k < source.fiber_dim {
                Expr::var(n + k)
            } else {
                Expr::zero()
            }
        }));
        FiberedMap(comps)
    }
}

/// Whether [`prolonged_morphism`] rejects fiber maps that fail the
/// anchor-compatibility test used as the admissibility condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Admissibility {
    Require,
    Skip,
}

/// Residuals of `rho'(phi(x)) Phi(x) - D phi(x) rho(x)`, one per entry.
pub fn anchor_compat_residuals(phi: &BundleMorphism, src: &Algebroid, tgt: &Algebroid) -> Vec<Expr> {
    let moved: Vec<Vec<Expr>> = tgt
        .anchor_rows()
        .iter()
        .map(|row| row.iter().map(|e| e.substitute(&phi.base_map)).collect())
        .collect();
    let jac = phi.base_jacobian(src.base_dim());
    let mut out = Vec::new();
    for k in 0..tgt.base_dim() {
        for a in 0..src.rank() {
            let lhs = Expr::sum((0..tgt.rank()).map(|g| &moved[k][g] * &phi.fiber[g][a]));
            let rhs = Expr::sum((0..src.base_dim()).map(|i| &jac[k][i] * src.anchor_coeff(i, a)));
            out.push(simplify(&(lhs - rhs)));
        }
    }
    out
}

/// `T^Phi Psi (p, b, v) = (Psi(p), Phi(b), T Psi(v))` as a bundle map
/// between the prolonged algebroids, in the adapted bases.
///
/// The fiber matrix is `[[Phi, 0], [dPsi^A'/dx^i rho_a^i, dPsi^A'/du^A]]`.
/// Its report carries the admissibility record, whatever the policy.
#[allow(clippy::too_many_arguments)]
pub fn prolonged_morphism(
    phi: &BundleMorphism,
    psi: &FiberedMap,
    src: &Algebroid,
    src_fib: &Fibration,
    tgt: &Algebroid,
    tgt_fib: &Fibration,
    policy: Admissibility,
    cfg: &CheckConfig,
) -> Result<Checked<BundleMorphism>> {
    check_fits(src, src_fib)?;
    check_fits(tgt, tgt_fib)?;
    phi.check_shapes(src, tgt)?;
    let (n, m, q) = (src.base_dim(), src.rank(), src_fib.fiber_dim);
    let (n2, m2, q2) = (tgt.base_dim(), tgt.rank(), tgt_fib.fiber_dim);
    if psi.0.len() != n2 + q2 {
        return Err(Error::Shape(format!("fibered map has {} components, expected {}", psi.0.len(), n2 + q2)));
    }
    if psi.0.iter().filter_map(Expr::max_var).any(|k| k >= n + q) {
        return Err(Error::Shape("fibered map references coordinates outside the source".into()));
    }
    for (k, (a, b)) in psi.0[..n2].iter().zip(&phi.base_map).enumerate() {
        if (n..n + q).any(|j| a.depends_on(j)) {
            return Err(Error::NotFibered(format!("base component {} depends on fiber coordinates", k + 1)));
        }
        if !simplify(&(a - b)).is_zero() {
            return Err(Error::NotFibered(format!("base component {} is {a}, not phi = {b}", k + 1)));
        }
    }

    let mut report = VerificationReport::new(cfg.tol);
    let pts = src.samples(cfg.samples);
    let (r, at) = sampled_residual(&anchor_compat_residuals(phi, src, tgt), &pts)?;
    let mut record = CheckRecord::new("admissibility (proxy)", "rho' Phi = D phi rho", r, cfg.tol);
    record.point = at;
    if policy == Admissibility::Require && !record.pass {
        return Err(Error::NotAdmissible(format!(
            "rho' Phi - D phi rho reaches {r:e} at {:?}",
            record.point.clone().unwrap_or_default()
        )));
    }
    report.push(record);

    let mut fiber = vec![vec![Expr::zero(); m + q]; m2 + q2];
    for (g, row) in phi.fiber.iter().enumerate() {
        fiber[g][..m].clone_from_slice(row);
    }
    for k in 0..q2 {
        let comp = &psi.0[n2 + k];
        let dx: Vec<Expr> = (0..n).map(|i| comp.diff(i)).collect();
        for a in 0..m {
            fiber[m2 + k][a] = Expr::sum((0..n).map(|i| &dx[i] * src.anchor_coeff(i, a)));
        }
        for j in 0..q {
            fiber[m2 + k][m + j] = comp.diff(n + j);
        }
    }
    let value = BundleMorphism::new(psi.0.clone(), fiber)?;
    Ok(Checked { value, report })
}
