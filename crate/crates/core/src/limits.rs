//! Finite direct systems of algebroids `E_1 -> E_2 -> ...` with bonding
//! maps `(eps_i, lambda_i)` from level `i` to level `i + 1`, and the
//! compatibility conditions that make the tower a direct system of Lie
//! algebroids.

use rayon::prelude::*;

use crate::algebroid::{nijenhuis_algebroid, tangent_algebroid, uniform_box, Algebroid, Section, SectionTriple, VectorField};
use crate::calculus::{check_morphism, BundleMorphism};
use crate::expr::{simplify, Expr, Node};
use crate::prolongation::{anchor_compat_residuals, prolong, prolonged_morphism, Admissibility, FiberedMap, Fibration};
use crate::report::{sweep, CheckConfig, CheckRecord, VerificationReport};
use crate::{Error, Result};

pub const DEFAULT_DEPTH: usize = 4;

/// Random section pairs per bonding map in the bracket and Leibniz checks.
const RANDOM_PAIRS: usize = 4;

/// Tolerance for comparing pushed coordinates in [`ind_equal`].
const IND_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DirectSystem {
    levels: Vec<Algebroid>,
    bondings: Vec<BundleMorphism>,
}

impl DirectSystem {
    /// `bondings[i]` maps level `i` into level `i + 1`.
    pub fn new(levels: Vec<Algebroid>, bondings: Vec<BundleMorphism>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::Shape("a direct system needs at least one level".into()));
        }
        if bondings.len() + 1 != levels.len() {
            return Err(Error::Shape(format!(
                "{} levels need {} bonding maps, got {}",
                levels.len(),
                levels.len() - 1,
                bondings.len()
            )));
        }
        for (i, (pair, map)) in levels.windows(2).zip(&bondings).enumerate() {
            if pair[1].base_dim() < pair[0].base_dim() || pair[1].rank() < pair[0].rank() {
                return Err(Error::Shape(format!("level {} is smaller than level {}", i + 2, i + 1)));
            }
            map.check_shapes(&pair[0], &pair[1])
                .map_err(|e| Error::Shape(format!("bonding {}->{}: {e}", i + 1, i + 2)))?;
        }
        Ok(DirectSystem { levels, bondings })
    }

    pub fn levels(&self) -> &[Algebroid] {
        &self.levels
    }

    pub fn bondings(&self) -> &[BundleMorphism] {
        &self.bondings
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// The first `depth` levels.
    pub fn truncate(mut self, depth: usize) -> Result<Self> {
        if depth == 0 || depth > self.levels.len() {
            return Err(Error::Level { level: depth, levels: self.levels.len() });
        }
        self.levels.truncate(depth);
        self.bondings.truncate(depth - 1);
        Ok(self)
    }

    fn check_level(&self, level: usize) -> Result<()> {
        if level >= self.levels.len() {
            return Err(Error::Level { level, levels: self.levels.len() });
        }
        Ok(())
    }

    /// The composite bonding map from level `i` to level `j >= i`.
    pub fn composite(&self, i: usize, j: usize) -> Result<BundleMorphism> {
        self.check_level(j)?;
        if i > j {
            return Err(Error::Level { level: i, levels: self.levels.len() });
        }
        let l = &self.levels[i];
        Ok(self.bondings[i..j]
            .iter()
            .fold(BundleMorphism::identity(l.base_dim(), l.rank()), |acc, b| acc.then(b)))
    }
}

/// A point of level `level` of the tower; points at different levels are
/// identified when their images agree at a common level.
#[derive(Debug, Clone, PartialEq)]
pub struct IndPoint {
    pub level: usize,
    pub coords: Vec<f64>,
}

impl IndPoint {
    pub fn new(level: usize, coords: Vec<f64>) -> Self {
        IndPoint { level, coords }
    }
}

fn eval_all(exprs: &[Expr], pt: &[f64]) -> Result<Vec<f64>> {
    exprs.iter().map(|e| Ok(e.eval(pt)?)).collect()
}

fn eval_matrix(m: &[Vec<Expr>], pt: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    m.iter()
        .map(|row| row.iter().zip(v).try_fold(0.0, |acc, (e, c)| Ok(acc + e.eval(pt)? * c)))
        .collect()
}

/// Image of `pt` at level `to`, applying one bonding map at a time.
pub fn push(sys: &DirectSystem, pt: &IndPoint, to: usize) -> Result<IndPoint> {
    sys.check_level(pt.level)?;
    sys.check_level(to)?;
    if to < pt.level {
        return Err(Error::Level { level: to, levels: sys.depth() });
    }
    if pt.coords.len() != sys.levels[pt.level].base_dim() {
        return Err(Error::Shape(format!(
            "point with {} coordinates at a level of dimension {}",
            pt.coords.len(),
            sys.levels[pt.level].base_dim()
        )));
    }
    let mut coords = pt.coords.clone();
    for b in &sys.bondings[pt.level..to] {
        coords = eval_all(&b.base_map, &coords)?;
    }
    Ok(IndPoint { level: to, coords })
}

/// Whether `a` and `b` name the same point of the limit.
pub fn ind_equal(sys: &DirectSystem, a: &IndPoint, b: &IndPoint) -> Result<bool> {
    let top = a.level.max(b.level);
    let (pa, pb) = (push(sys, a, top)?, push(sys, b, top)?);
    Ok(pa
        .coords
        .iter()
        .zip(&pb.coords)
        .all(|(x, y)| (x - y).abs() <= IND_TOL * (1.0 + x.abs().max(y.abs()))))
}

/// For a base map whose components are distinct coordinates or constants,
/// the source coordinate each target coordinate carries.
fn coordinate_injection(base_map: &[Expr], source_dim: usize) -> Option<Vec<Option<usize>>> {
    let mut hit = vec![false; source_dim];
    let mut out = Vec::with_capacity(base_map.len());
    for e in base_map {
        match e.node() {
            Node::Var(k) if *k < source_dim && !hit[*k] => {
                hit[*k] = true;
                out.push(Some(*k));
            }
            Node::Const(_) => out.push(None),
            _ => return None,
        }
    }
    hit.iter().all(|&h| h).then_some(out)
}

/// Extends a section `s` of level `i` to level `j` by `y -> lambda(pi(y)) s(pi(y))`,
/// where `pi` is the coordinate projection left inverse to `eps`.
fn extend_section(map: &BundleMorphism, positions: &[Option<usize>], s: &Section, source_dim: usize) -> Section {
    let mut pi = vec![Expr::zero(); source_dim];
    for (y, x) in positions.iter().enumerate() {
        if let Some(x) = x {
            pi[*x] = Expr::var(y);
        }
    }
    Section(map.push_section(s).0.iter().map(|e| simplify(&e.substitute(&pi))).collect())
}

/// Basis triples `(e_a, e_b, e_c)`, `a < b < c`. With anchor compatibility
/// the Jacobiator is tensorial, so these decide the Jacobi identity.
fn basis_triples(rank: usize) -> Vec<SectionTriple> {
    let mut out = Vec::new();
    for a in 0..rank {
        for b in a + 1..rank {
            for c in b + 1..rank {
                out.push(SectionTriple {
                    label: format!("(e{}, e{}, e{})", a + 1, b + 1, c + 1),
                    sections: [Section::basis(rank, a), Section::basis(rank, b), Section::basis(rank, c)],
                });
            }
        }
    }
    out
}

fn verify_level(alg: &Algebroid, cfg: &CheckConfig) -> Result<VerificationReport> {
    let mut rep = VerificationReport::new(cfg.tol);
    rep.push(alg.check_anchor_bracket_default(cfg)?);
    let triples = basis_triples(alg.rank());
    if triples.is_empty() {
        rep.push(CheckRecord::structural("jacobi", "rank below 3"));
    } else {
        rep.push(alg.check_jacobi(&triples, cfg)?);
    }
    Ok(rep)
}

fn verify_pair(
    src: &Algebroid,
    tgt: &Algebroid,
    map: &BundleMorphism,
    pair: usize,
    cfg: &CheckConfig,
) -> Result<VerificationReport> {
    let mut rep = VerificationReport::new(cfg.tol);
    let pts = src.samples(cfg.samples);

    let residuals = anchor_compat_residuals(map, src, tgt);
    let entries: Vec<(usize, usize)> = (0..tgt.base_dim()).flat_map(|k| (0..src.rank()).map(move |a| (k, a))).collect();
    rep.push(sweep("(a) anchor compatibility", &entries, &pts, cfg.tol, |&(k, a)| {
        Ok((format!("rho' lambda e{} - D eps rho e{}, component {}", a + 1, a + 1, k + 1), vec![
            residuals[k * src.rank() + a].clone(),
        ]))
    })?);

    rep.extend(check_morphism(map, src, tgt, cfg)?.prefixed("(b) "));

    let positions = coordinate_injection(&map.base_map, src.base_dim()).ok_or_else(|| {
        Error::Unsupported(format!(
            "bonding {}->{}: compatible section pairs are only built for coordinate injections",
            pair + 1,
            pair + 2
        ))
    })?;
    let mut rng = crate::random::rng(cfg.seed ^ (0x1b + pair as u64));
    let cases: Vec<(Section, Section, Expr)> = (0..RANDOM_PAIRS)
        .map(|_| {
            let s1 = crate::random::section(&mut rng, src.base_dim(), src.rank());
            let s2 = crate::random::section(&mut rng, src.base_dim(), src.rank());
            let g = crate::random::polynomial(&mut rng, tgt.base_dim());
            (s1, s2, g)
        })
        .collect();
    let lift = |s: &Section| extend_section(map, &positions, s, src.base_dim());
    let restrict = |s: &Section| -> Vec<Expr> { s.0.iter().map(|e| e.substitute(&map.base_map)).collect() };
    let labelled: Vec<(usize, &(Section, Section, Expr))> = cases.iter().enumerate().collect();

    rep.push(sweep("(c) bracket compatibility", &labelled, &pts, cfg.tol, |(k, (s1, s2, _))| {
        let lhs = map.push_section(&src.bracket(s1, s2)?);
        let rhs = restrict(&tgt.bracket(&lift(s1), &lift(s2))?);
        Ok((format!("random pair #{k}"), lhs.0.iter().zip(&rhs).map(|(a, b)| simplify(&(a - b))).collect()))
    })?);

    rep.push(sweep("(d) Leibniz compatibility", &labelled, &pts, cfg.tol, |(k, (s1, s2, g))| {
        let g_src = g.substitute(&map.base_map);
        let lhs = map.push_section(&src.bracket(s1, &s2.scale(&g_src))?);
        let rhs = restrict(&tgt.bracket(&lift(s1), &lift(s2).scale(g))?);
        Ok((format!("random pair #{k}"), lhs.0.iter().zip(&rhs).map(|(a, b)| simplify(&(a - b))).collect()))
    })?);

    let images: Vec<Vec<f64>> = pts.iter().map(|p| eval_all(&map.base_map, p)).collect::<Result<_>>()?;
    let mut closest = f64::INFINITY;
    for (a, pa) in images.iter().enumerate() {
        for pb in &images[a + 1..] {
            let d = pa.iter().zip(pb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            closest = closest.min(d);
        }
    }
    let injective = closest > 1e-12;
    let mut inj = CheckRecord::new("injectivity", format!("closest sample images {closest:e} apart"), 0.0, cfg.tol);
    if !injective {
        inj.max_residual = 1.0;
        inj.pass = false;
    }
    rep.push(inj);
    rep.push(CheckRecord::structural(
        "trivialization compatibility",
        "fiber-linear bonding in a single chart",
    ));
    Ok(rep)
}

/// Checks every level and every consecutive bonding map. Records are
/// prefixed with `level i: ` or `pair i->j: `.
pub fn verify_direct_system(sys: &DirectSystem, cfg: &CheckConfig) -> Result<VerificationReport> {
    let per_level: Vec<VerificationReport> = sys
        .levels
        .par_iter()
        .enumerate()
        .map(|(i, l)| Ok(verify_level(l, cfg)?.prefixed(&format!("level {}: ", i + 1))))
        .collect::<Result<_>>()?;
    let per_pair: Vec<VerificationReport> = (0..sys.bondings.len())
        .into_par_iter()
        .map(|i| {
            let rep = verify_pair(&sys.levels[i], &sys.levels[i + 1], &sys.bondings[i], i, cfg)?;
            Ok(rep.prefixed(&format!("pair {}->{}: ", i + 1, i + 2)))
        })
        .collect::<Result<_>>()?;
    let mut rep = VerificationReport::new(cfg.tol);
    per_level.into_iter().chain(per_pair).for_each(|r| rep.extend(r));
    Ok(rep)
}

/// One object per level, compatible with the bonding maps.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `lambda . s_i = s_{i+1} . eps`.
    Sections(Vec<Section>),
    /// `D eps . X_i = X_{i+1} . eps`.
    Fields(Vec<VectorField>),
    /// `f_i = f_{i+1} . eps`.
    Functions(Vec<Expr>),
}

impl Family {
    pub fn len(&self) -> usize {
        match self {
            Family::Sections(v) => v.len(),
            Family::Fields(v) => v.len(),
            Family::Functions(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Family::Sections(_) => "sections",
            Family::Fields(_) => "fields",
            Family::Functions(_) => "functions",
        }
    }

    fn check_shapes(&self, sys: &DirectSystem) -> Result<()> {
        if self.len() != sys.depth() {
            return Err(Error::Shape(format!("family has {} entries for {} levels", self.len(), sys.depth())));
        }
        for (i, l) in sys.levels.iter().enumerate() {
            let (len, want, vars): (usize, usize, Vec<&Expr>) = match self {
                Family::Sections(v) => (v[i].rank(), l.rank(), v[i].0.iter().collect()),
                Family::Fields(v) => (v[i].dim(), l.base_dim(), v[i].0.iter().collect()),
                Family::Functions(v) => (1, 1, vec![&v[i]]),
            };
            if len != want {
                return Err(Error::Shape(format!("level {} entry has {len} components, expected {want}", i + 1)));
            }
            if vars.iter().filter_map(|e| e.max_var()).any(|k| k >= l.base_dim()) {
                return Err(Error::Shape(format!("level {} entry uses coordinates beyond the base", i + 1)));
            }
        }
        Ok(())
    }

    /// The vanishing expressions of the compatibility from level `i` to `i + 1`.
    fn residual(&self, sys: &DirectSystem, i: usize) -> Vec<Expr> {
        let map = &sys.bondings[i];
        let restrict = |es: &[Expr]| -> Vec<Expr> { es.iter().map(|e| e.substitute(&map.base_map)).collect() };
        let (lhs, rhs) = match self {
            Family::Sections(v) => (map.push_section(&v[i]).0, restrict(&v[i + 1].0)),
            Family::Fields(v) => {
                let jac = map.base_jacobian(sys.levels[i].base_dim());
                let pushed = jac
                    .iter()
                    .map(|row| Expr::sum(row.iter().zip(&v[i].0).map(|(a, b)| a * b)))
                    .collect();
                (pushed, restrict(&v[i + 1].0))
            }
            Family::Functions(v) => (vec![v[i].clone()], restrict(std::slice::from_ref(&v[i + 1]))),
        };
        lhs.iter().zip(&rhs).map(|(a, b)| simplify(&(a - b))).collect()
    }

    fn eval_at(&self, level: usize, pt: &[f64]) -> Result<Vec<f64>> {
        match self {
            Family::Sections(v) => eval_all(&v[level].0, pt),
            Family::Fields(v) => eval_all(&v[level].0, pt),
            Family::Functions(v) => Ok(vec![v[level].eval(pt)?]),
        }
    }

    /// The image at level `i + 1` of a value at `pt` on level `i`.
    fn push_value(&self, sys: &DirectSystem, i: usize, pt: &[f64], value: &[f64]) -> Result<Vec<f64>> {
        let map = &sys.bondings[i];
        match self {
            Family::Sections(_) => eval_matrix(&map.fiber, pt, value),
            Family::Fields(_) => eval_matrix(&map.base_jacobian(sys.levels[i].base_dim()), pt, value),
            Family::Functions(_) => Ok(value.to_vec()),
        }
    }
}

/// Sampled compatibility of `fam` at every consecutive pair of levels.
pub fn verify_family(sys: &DirectSystem, fam: &Family, cfg: &CheckConfig) -> Result<VerificationReport> {
    fam.check_shapes(sys)?;
    let mut rep = VerificationReport::new(cfg.tol);
    for i in 0..sys.bondings.len() {
        let pts = sys.levels[i].samples(cfg.samples);
        let check = format!("pair {}->{}: {} compatibility", i + 1, i + 2, fam.kind());
        let res = fam.residual(sys, i);
        rep.push(sweep(&check, &[()], &pts, cfg.tol, |_| Ok(("family".to_string(), res.clone())))?);
    }
    Ok(rep)
}

/// Value of the family at an ind-point, read off its own level. The value
/// is compared with every higher representative, carried along the bonding
/// maps, and rejected when they disagree by `tol` or more.
pub fn limit_eval(sys: &DirectSystem, fam: &Family, pt: &IndPoint, tol: f64) -> Result<Vec<f64>> {
    fam.check_shapes(sys)?;
    push(sys, pt, pt.level)?;
    let value = fam.eval_at(pt.level, &pt.coords)?;
    let (mut coords, mut carried) = (pt.coords.clone(), value.clone());
    let mut worst: f64 = 0.0;
    for i in pt.level..sys.bondings.len() {
        carried = fam.push_value(sys, i, &coords, &carried)?;
        coords = eval_all(&sys.bondings[i].base_map, &coords)?;
        let direct = fam.eval_at(i + 1, &coords)?;
        let r = carried.iter().zip(&direct).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst = worst.max(if r.is_nan() { f64::INFINITY } else { r });
    }
    if worst >= tol {
        return Err(Error::IncompatibleFamily { residual: worst });
    }
    Ok(value)
}

/// The system of prolongations along `P_i = M_i x R^{q_i}` with bonding
/// maps `T^lambda theta`, `theta(x, u) = (eps(x), u, 0)`.
pub fn prolong_system(sys: &DirectSystem, fiber_dims: &[usize], cfg: &CheckConfig) -> Result<DirectSystem> {
    if fiber_dims.len() != sys.depth() {
        return Err(Error::Shape(format!("{} fiber dimensions for {} levels", fiber_dims.len(), sys.depth())));
    }
    if fiber_dims.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Shape("fiber dimensions must be nondecreasing".into()));
    }
    let fibs: Vec<Fibration> = sys
        .levels
        .iter()
        .zip(fiber_dims)
        .map(|(l, &q)| Fibration::over(l, q))
        .collect::<Result<_>>()?;
    let levels = sys.levels.iter().zip(&fibs).map(|(l, f)| prolong(l, f)).collect::<Result<Vec<_>>>()?;
    let bondings = (0..sys.bondings.len())
        .map(|i| {
            let map = &sys.bondings[i];
            let theta = FiberedMap::product(&map.base_map, &fibs[i], fibs[i + 1].fiber_dim());
            let t = prolonged_morphism(
                map,
                &theta,
                &sys.levels[i],
                &fibs[i],
                &sys.levels[i + 1],
                &fibs[i + 1],
                Admissibility::Require,
                cfg,
            )?;
            Ok(t.value)
        })
        .collect::<Result<Vec<_>>>()?;
    DirectSystem::new(levels, bondings)
}

/// `T R^1 -> T R^2 -> ... -> T R^depth` with the canonical injections.
pub fn tangent_tower(depth: usize) -> Result<DirectSystem> {
    let levels = (1..=depth)
        .map(|n| tangent_algebroid(n, uniform_box(n, -1.0, 1.0)))
        .collect::<Result<_>>()?;
    let bondings = (1..depth).map(|n| BundleMorphism::canonical_injection(n, n + 1, n, n + 1)).collect();
    DirectSystem::new(levels, bondings)
}

/// The anchor `N_n = diag((x_k^2 + y_k^2)/2)` on `R^{2n}` with coordinates
/// ordered `x1, y1, x2, y2, ..`.
pub fn oscillator_tensor(n: usize) -> Vec<Vec<Expr>> {
    let dim = 2 * n;
    (0..dim)
        .map(|i| {
            (0..dim)
                .map(|j| {
                    if i == j {
                        let k = 2 * (i / 2);
                        (Expr::var(k).powi(2) + Expr::var(k + 1).powi(2)) / Expr::constant(2.0)
                    } else {
                        Expr::zero()
                    }
                })
                .collect()
        })
        .collect()
}

/// The Nijenhuis algebroids of `N_1, .., N_depth` with the canonical injections.
pub fn oscillator_tower(depth: usize, cfg: &CheckConfig) -> Result<DirectSystem> {
    let levels = (1..=depth)
        .map(|n| {
            let checked = nijenhuis_algebroid(oscillator_tensor(n), uniform_box(2 * n, -1.5, 1.5), cfg)?;
            let names = (1..=n).flat_map(|k| [format!("x{k}"), format!("y{k}")]).collect();
            checked.value.with_coords(names)
        })
        .collect::<Result<_>>()?;
    let bondings = (1..depth)
        .map(|n| BundleMorphism::canonical_injection(2 * n, 2 * n + 2, 2 * n, 2 * n + 2))
        .collect();
    DirectSystem::new(levels, bondings)
}
