//! JSON documents for algebroids, forms, morphisms, direct systems,
//! families and Hamiltonian systems. Expressions are s-expression strings
//! over the coordinate names of the relevant chart; all indices are 1-based.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::algebroid::{uniform_box, Algebroid, Section, VectorField};
use crate::calculus::{sort_with_sign, BundleMorphism, QForm};
use crate::expr::sexpr::{indexed_names, parse, to_sexpr};
use crate::expr::Expr;
use crate::limits::{DirectSystem, Family};
use crate::mechanics::HamiltonianSystem;
use crate::{Error, Result};

pub fn parse_expr(src: &str, names: &[String]) -> Result<Expr> {
    parse(src, names).map_err(|source| Error::Parse { src: src.to_string(), source })
}

fn parse_all(srcs: &[String], names: &[String]) -> Result<Vec<Expr>> {
    srcs.iter().map(|s| parse_expr(s, names)).collect()
}

fn parse_matrix(rows: &[Vec<String>], names: &[String]) -> Result<Vec<Vec<Expr>>> {
    rows.iter().map(|r| parse_all(r, names)).collect()
}

fn print_all(es: &[Expr], names: &[String]) -> Vec<String> {
    es.iter().map(|e| to_sexpr(e, names)).collect()
}

fn one_based(k: usize, bound: usize, what: &str) -> Result<usize> {
    if k == 0 || k > bound {
        return Err(Error::Shape(format!("{what} index {k} outside 1..={bound}")));
    }
    Ok(k - 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureDoc {
    pub alpha: usize,
    pub beta: usize,
    pub gamma: usize,
    pub expr: String,
}

fn parse_structure(entries: &[StructureDoc], rank: usize, names: &[String]) -> Result<Vec<(usize, usize, usize, Expr)>> {
    entries
        .iter()
        .map(|e| {
            Ok((
                one_based(e.alpha, rank, "alpha")?,
                one_based(e.beta, rank, "beta")?,
                one_based(e.gamma, rank, "gamma")?,
                parse_expr(&e.expr, names)?,
            ))
        })
        .collect()
}

/// `{"base_dim", "rank", "coords"?, "anchor": n rows of m exprs,
/// "structure": [{alpha, beta, gamma, expr}], "sample_box"?}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgebroidDoc {
    pub base_dim: usize,
    pub rank: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<String>>,
    pub anchor: Vec<Vec<String>>,
    #[serde(default)]
    pub structure: Vec<StructureDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_box: Option<Vec<[f64; 2]>>,
}

impl AlgebroidDoc {
    pub fn build(&self) -> Result<Algebroid> {
        let (n, m) = (self.base_dim, self.rank);
        if n == 0 || m == 0 {
            return Err(Error::Shape("base_dim and rank must be positive".into()));
        }
        if self.anchor.len() != n || self.anchor.iter().any(|r| r.len() != m) {
            return Err(Error::Shape(format!("anchor must have {n} rows of {m} expressions")));
        }
        let names = match &self.coords {
            Some(c) if c.len() == n => c.clone(),
            Some(c) => return Err(Error::Shape(format!("{} coordinate names for base_dim {n}", c.len()))),
            None => indexed_names("x", n),
        };
        let anchor = parse_matrix(&self.anchor, &names)?;
        let structure = parse_structure(&self.structure, m, &names)?;
        let sample_box = self.sample_box.clone().unwrap_or_else(|| uniform_box(n, -1.0, 1.0));
        Algebroid::new(anchor, structure, sample_box)?.with_coords(names)
    }

    pub fn from_algebroid(alg: &Algebroid) -> Self {
        let names = alg.coords();
        AlgebroidDoc {
            base_dim: alg.base_dim(),
            rank: alg.rank(),
            coords: Some(names.to_vec()),
            anchor: alg.anchor_rows().iter().map(|r| print_all(r, names)).collect(),
            structure: alg
                .structure_entries()
                .into_iter()
                .map(|(a, b, g, e)| StructureDoc { alpha: a + 1, beta: b + 1, gamma: g + 1, expr: to_sexpr(&e, names) })
                .collect(),
            sample_box: Some(alg.sample_box().to_vec()),
        }
    }
}

pub fn algebroid_from_json(src: &str) -> Result<Algebroid> {
    serde_json::from_str::<AlgebroidDoc>(src)?.build()
}

pub fn algebroid_to_json(alg: &Algebroid) -> String {
    serde_json::to_string_pretty(&AlgebroidDoc::from_algebroid(alg)).expect("documents serialize")
}

/// `{"fiber_dim": q}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiberDoc {
    pub fiber_dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentDoc {
    pub indices: Vec<usize>,
    pub expr: String,
}

/// `{"degree", "components": [{"indices": [..], "expr"}]}`; indices may be
/// in any order and missing components are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormDoc {
    pub degree: usize,
    #[serde(default)]
    pub components: Vec<ComponentDoc>,
}

impl FormDoc {
    pub fn build(&self, alg: &Algebroid) -> Result<QForm> {
        let m = alg.rank();
        if self.degree > m {
            return Err(Error::Degree { degree: self.degree, rank: m });
        }
        let mut comps = vec![Expr::zero(); crate::calculus::binomial(m, self.degree)];
        let tuples = crate::calculus::increasing_tuples(m, self.degree);
        for c in &self.components {
            if c.indices.len() != self.degree {
                return Err(Error::Shape(format!("component {:?} does not have {} indices", c.indices, self.degree)));
            }
            let mut idx: Vec<usize> = c.indices.iter().map(|&k| one_based(k, m, "form")).collect::<Result<_>>()?;
            let sign = sort_with_sign(&mut idx)
                .ok_or_else(|| Error::Shape(format!("component {:?} repeats an index", c.indices)))?;
            let k = tuples.binary_search(&idx).expect("sorted tuple is increasing");
            comps[k] = &comps[k] + &(Expr::constant(sign) * parse_expr(&c.expr, alg.coords())?);
        }
        QForm::new(m, self.degree, comps)
    }

    pub fn from_form(w: &QForm, names: &[String]) -> Self {
        FormDoc {
            degree: w.degree(),
            components: w
                .tuples()
                .iter()
                .zip(w.components())
                .filter(|(_, e)| !e.is_zero())
                .map(|(t, e)| ComponentDoc { indices: t.iter().map(|k| k + 1).collect(), expr: to_sexpr(e, names) })
                .collect(),
        }
    }
}

/// `{"base_map": [expr], "fiber": [[expr]]}` over the source coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorphismDoc {
    pub base_map: Vec<String>,
    pub fiber: Vec<Vec<String>>,
}

impl MorphismDoc {
    pub fn build(&self, names: &[String]) -> Result<BundleMorphism> {
        BundleMorphism::new(parse_all(&self.base_map, names)?, parse_matrix(&self.fiber, names)?)
    }

    pub fn from_morphism(psi: &BundleMorphism, names: &[String]) -> Self {
        MorphismDoc {
            base_map: print_all(&psi.base_map, names),
            fiber: psi.fiber.iter().map(|r| print_all(r, names)).collect(),
        }
    }
}

/// `{"levels": [algebroid], "base_bondings": [[expr]], "fiber_bondings":
/// [[[expr]]], "depth"?}`. Bonding `i` is written in the coordinates of
/// level `i`; `depth` keeps only the first `depth` levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemDoc {
    pub levels: Vec<AlgebroidDoc>,
    #[serde(default)]
    pub base_bondings: Vec<Vec<String>>,
    #[serde(default)]
    pub fiber_bondings: Vec<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
}

impl SystemDoc {
    pub fn build(&self) -> Result<DirectSystem> {
        let levels: Vec<Algebroid> = self.levels.iter().map(AlgebroidDoc::build).collect::<Result<_>>()?;
        if self.base_bondings.len() != self.fiber_bondings.len() {
            return Err(Error::Shape("base_bondings and fiber_bondings differ in length".into()));
        }
        let bondings = self
            .base_bondings
            .iter()
            .zip(&self.fiber_bondings)
            .zip(&levels)
            .map(|((b, f), l)| {
                BundleMorphism::new(parse_all(b, l.coords())?, parse_matrix(f, l.coords())?)
            })
            .collect::<Result<_>>()?;
        let sys = DirectSystem::new(levels, bondings)?;
        match self.depth {
            Some(d) => sys.truncate(d),
            None => Ok(sys),
        }
    }

    pub fn from_system(sys: &DirectSystem) -> Self {
        let names = |i: usize| sys.levels()[i].coords().to_vec();
        SystemDoc {
            levels: sys.levels().iter().map(AlgebroidDoc::from_algebroid).collect(),
            base_bondings: sys.bondings().iter().enumerate().map(|(i, b)| print_all(&b.base_map, &names(i))).collect(),
            fiber_bondings: sys
                .bondings()
                .iter()
                .enumerate()
                .map(|(i, b)| b.fiber.iter().map(|r| print_all(r, &names(i))).collect())
                .collect(),
            depth: Some(sys.depth()),
        }
    }
}

pub fn system_from_json(src: &str) -> Result<DirectSystem> {
    serde_json::from_str::<SystemDoc>(src)?.build()
}

pub fn system_to_json(sys: &DirectSystem) -> String {
    serde_json::to_string_pretty(&SystemDoc::from_system(sys)).expect("documents serialize")
}

/// `{"kind": "sections" | "fields" | "functions", "levels": [..]}`: one
/// expression list per level for sections and fields, one expression per
/// level for functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyDoc {
    pub kind: String,
    pub levels: Vec<Value>,
}

impl FamilyDoc {
    pub fn build(&self, sys: &DirectSystem) -> Result<Family> {
        if self.levels.len() != sys.depth() {
            return Err(Error::Shape(format!("family has {} levels, system has {}", self.levels.len(), sys.depth())));
        }
        let names = |i: usize| sys.levels()[i].coords();
        let lists = || -> Result<Vec<Vec<Expr>>> {
            self.levels
                .iter()
                .enumerate()
                .map(|(i, v)| parse_all(&serde_json::from_value::<Vec<String>>(v.clone())?, names(i)))
                .collect()
        };
        match self.kind.as_str() {
            "sections" => Ok(Family::Sections(lists()?.into_iter().map(Section).collect())),
            "fields" => Ok(Family::Fields(lists()?.into_iter().map(VectorField).collect())),
            "functions" => Ok(Family::Functions(
                self.levels
                    .iter()
                    .enumerate()
                    .map(|(i, v)| parse_expr(&serde_json::from_value::<String>(v.clone())?, names(i)))
                    .collect::<Result<_>>()?,
            )),
            other => Err(Error::Shape(format!("unknown family kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorDoc {
    pub name: String,
    pub expr: String,
}

/// `{"base_dim", "rank", "anchor", "structure", "hamiltonian", "domain",
/// "monitors"?}` with expressions over `x1..xn, mu1..mum`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianDoc {
    pub base_dim: usize,
    pub rank: usize,
    pub anchor: Vec<Vec<String>>,
    #[serde(default)]
    pub structure: Vec<StructureDoc>,
    pub hamiltonian: String,
    pub domain: Vec<[f64; 2]>,
    #[serde(default)]
    pub monitors: Vec<MonitorDoc>,
}

impl HamiltonianDoc {
    pub fn build(&self) -> Result<HamiltonianSystem> {
        let (n, m) = (self.base_dim, self.rank);
        if self.anchor.len() != n || self.anchor.iter().any(|r| r.len() != m) {
            return Err(Error::Shape(format!("anchor must have {n} rows of {m} expressions")));
        }
        let mut names = indexed_names("x", n);
        names.extend(indexed_names("mu", m));
        let monitors = self
            .monitors
            .iter()
            .map(|d| Ok((d.name.clone(), parse_expr(&d.expr, &names)?)))
            .collect::<Result<_>>()?;
        let sys = HamiltonianSystem::new(
            parse_matrix(&self.anchor, &names)?,
            parse_structure(&self.structure, m, &names)?,
            parse_expr(&self.hamiltonian, &names)?,
            self.domain.clone(),
        )?;
        Ok(sys.with_monitors(monitors))
    }

    pub fn from_system(sys: &HamiltonianSystem) -> Self {
        let names = sys.coord_names();
        let m = sys.rank();
        let mut structure = Vec::new();
        for a in 0..m {
            for b in a + 1..m {
                for g in 0..m {
                    let c = sys.structure_fn(a, b, g);
                    if !c.is_zero() {
                        structure.push(StructureDoc { alpha: a + 1, beta: b + 1, gamma: g + 1, expr: to_sexpr(c, &names) });
                    }
                }
            }
        }
        HamiltonianDoc {
            base_dim: sys.base_dim(),
            rank: m,
            anchor: sys.anchor().iter().map(|r| print_all(r, &names)).collect(),
            structure,
            hamiltonian: to_sexpr(sys.hamiltonian(), &names),
            domain: sys.domain().to_vec(),
            monitors: sys.monitors()[1..]
                .iter()
                .map(|(name, e)| MonitorDoc { name: name.clone(), expr: to_sexpr(e, &names) })
                .collect(),
        }
    }
}

pub fn hamiltonian_from_json(src: &str) -> Result<HamiltonianSystem> {
    serde_json::from_str::<HamiltonianDoc>(src)?.build()
}
