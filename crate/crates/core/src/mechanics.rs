//! Hamilton equations on the dual `E*` of an algebroid and a fixed-step RK4
//! integrator.
//!
//! Phase coordinates are `(x^1..x^n, mu_1..mu_m)` and the equations read
//!
//! ```text
//! dx^i/dt    =  rho_a^i dH/dmu_a
//! dmu_a/dt   = -rho_a^i dH/dx^i - mu_g C_ab^g dH/dmu_b
//! ```

use crate::algebroid::{nijenhuis_algebroid, uniform_box, VectorField};
use crate::expr::sexpr::indexed_names;
use crate::expr::{simplify, EvalError, Expr};
use crate::limits::oscillator_tensor;
use crate::report::CheckConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSystem {
    base_dim: usize,
    rank: usize,
    anchor: Vec<Vec<Expr>>,
    structure: Vec<Vec<Vec<Expr>>>,
    hamiltonian: Expr,
    domain: Vec<[f64; 2]>,
    monitors: Vec<(String, Expr)>,
}

impl HamiltonianSystem {
    /// `anchor[i][a] = rho_a^i` and structure entries `(a, b, g, C_ab^g)`,
    /// all as expressions in the phase coordinates. `domain` is the box of
    /// sample and start points. The Hamiltonian is monitored by default.
    pub fn new(
        anchor: Vec<Vec<Expr>>,
        structure: impl IntoIterator<Item = (usize, usize, usize, Expr)>,
        hamiltonian: Expr,
        domain: Vec<[f64; 2]>,
    ) -> Result<Self> {
        let n = anchor.len();
        let m = anchor.first().map_or(0, Vec::len);
        if n == 0 || m == 0 || anchor.iter().any(|r| r.len() != m) {
            return Err(Error::Shape("anchor must be a nonempty n x m matrix".into()));
        }
        if domain.len() != n + m {
            return Err(Error::Shape(format!("domain has {} intervals, expected {}", domain.len(), n + m)));
        }
        let mut c = vec![vec![vec![Expr::zero(); m]; m]; m];
        for (a, b, g, e) in structure {
            if a >= m || b >= m || g >= m {
                return Err(Error::Shape(format!("structure index ({a},{b},{g}) out of range")));
            }
            if a == b {
                return Err(Error::Shape("structure functions are antisymmetric in the lower indices".into()));
            }
            let e = simplify(&e);
            c[b][a][g] = simplify(&-e.clone());
            c[a][b][g] = e;
        }
        let all = anchor.iter().flatten().chain(c.iter().flatten().flatten()).chain([&hamiltonian]);
        if all.filter_map(Expr::max_var).any(|k| k >= n + m) {
            return Err(Error::Dimension("coefficient references a coordinate beyond the phase space".into()));
        }
        Ok(HamiltonianSystem {
            base_dim: n,
            rank: m,
            anchor,
            structure: c,
            monitors: vec![("H".to_string(), hamiltonian.clone())],
            hamiltonian,
            domain,
        })
    }

    /// Replaces the extra monitored quantities; `H` is always kept first.
    pub fn with_monitors(mut self, extra: Vec<(String, Expr)>) -> Self {
        self.monitors.truncate(1);
        self.monitors.extend(extra);
        self
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn phase_dim(&self) -> usize {
        self.base_dim + self.rank
    }

    pub fn hamiltonian(&self) -> &Expr {
        &self.hamiltonian
    }

    pub fn anchor(&self) -> &[Vec<Expr>] {
        &self.anchor
    }

    pub fn structure_fn(&self, a: usize, b: usize, g: usize) -> &Expr {
        &self.structure[a][b][g]
    }

    pub fn domain(&self) -> &[[f64; 2]] {
        &self.domain
    }

    pub fn monitors(&self) -> &[(String, Expr)] {
        &self.monitors
    }

    /// `x1..xn, mu1..mum`.
    pub fn coord_names(&self) -> Vec<String> {
        let mut names = indexed_names("x", self.base_dim);
        names.extend(indexed_names("mu", self.rank));
        names
    }

    pub fn samples(&self, count: usize) -> Vec<Vec<f64>> {
        crate::sampling::halton_points(&self.domain, count)
    }

    fn mu(&self, a: usize) -> Expr {
        Expr::var(self.base_dim + a)
    }

    /// The Hamiltonian vector field on the phase space.
    pub fn hamilton_vector_field(&self) -> VectorField {
        let (n, m) = (self.base_dim, self.rank);
        let dh_dx: Vec<Expr> = (0..n).map(|i| self.hamiltonian.diff(i)).collect();
        let dh_dmu: Vec<Expr> = (0..m).map(|a| self.hamiltonian.diff(n + a)).collect();
        let mut field = Vec::with_capacity(n + m);
        for i in 0..n {
            field.push(Expr::sum((0..m).map(|a| &self.anchor[i][a] * &dh_dmu[a])));
        }
        for a in 0..m {
            let mut terms: Vec<Expr> = (0..n).map(|i| -(&self.anchor[i][a] * &dh_dx[i])).collect();
            for b in 0..m {
                for g in 0..m {
                    let c = &self.structure[a][b][g];
                    if !c.is_zero() {
                        terms.push(-Expr::product([self.mu(g), c.clone(), dh_dmu[b].clone()]));
                    }
                }
            }
            field.push(Expr::sum(terms));
        }
        VectorField(field.iter().map(simplify).collect())
    }
}

/// The convenient harmonic oscillator on `T* R^n`: the anchor is the
/// Nijenhuis tensor `N_n` with its `y^k` read as the momenta `mu_k`, so
/// `rho_a^i = delta_a^i (x_a^2 + mu_a^2)/2`, and `H = prod ln(x_i^2 + mu_i^2)`.
///
/// The structure functions are those of the `N_n` algebroid between the
/// `x` directions, with `y^k -> mu_k`; they vanish. Besides `H` the squared
/// radii `r_k^2 = x_k^2 + mu_k^2` are monitored.
pub fn harmonic_oscillator_system(n: usize) -> Result<HamiltonianSystem> {
    if n == 0 {
        return Err(Error::Dimension("the oscillator needs n >= 1".into()));
    }
    let nij = nijenhuis_algebroid(oscillator_tensor(n), uniform_box(2 * n, 0.5, 1.5), &CheckConfig::default())?.value;
    // N_n coordinates are interleaved (x1, y1, x2, y2, ..).
    let to_phase: Vec<Expr> = (0..2 * n).map(|k| Expr::var(if k % 2 == 0 { k / 2 } else { n + k / 2 })).collect();
    let mut structure = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            for g in 0..n {
                let c = nij.structure_fn(2 * a, 2 * b, 2 * g).substitute(&to_phase);
                if !simplify(&c).is_zero() {
                    structure.push((a, b, g, c));
                }
            }
        }
    }
    let r2 = |k: usize| Expr::var(k).powi(2) + Expr::var(n + k).powi(2);
    let anchor = (0..n)
        .map(|i| (0..n).map(|a| if i == a { r2(i) / Expr::constant(2.0) } else { Expr::zero() }).collect())
        .collect();
    let h = Expr::product((0..n).map(|k| r2(k).ln()));
    let mut domain = vec![[0.5, 1.5]; n];
    domain.extend(vec![[-1.5, 1.5]; n]);
    let monitors = (0..n).map(|k| (format!("r{}^2", k + 1), r2(k))).collect();
    Ok(HamiltonianSystem::new(anchor, structure, h, domain)?.with_monitors(monitors))
}

/// Fixed-step samples of a flow with the monitored quantities at each step.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub monitor_names: Vec<String>,
    pub monitors: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("a trajectory has at least its initial state")
    }

    /// `max_t |q(z_t) - q(z_0)|` for every monitored quantity.
    pub fn drift(&self) -> Vec<(String, f64)> {
        self.monitor_names
            .iter()
            .enumerate()
            .map(|(k, name)| {
                let q0 = self.monitors[0][k];
                let d = self.monitors.iter().map(|row| (row[k] - q0).abs()).fold(0.0, f64::max);
                (name.clone(), d)
            })
            .collect()
    }
}

fn eval_field(field: &[Expr], z: &[f64]) -> Result<Vec<f64>, EvalError> {
    field.iter().map(|e| e.eval(z)).collect()
}

/// Classical RK4 from `z0` up to time `t_end`. The step is `t_end / N` with
/// `N = ceil(t_end / dt)`, so the last sample lands on `t_end`.
pub fn integrate_rk4(sys: &HamiltonianSystem, z0: &[f64], dt: f64, t_end: f64) -> Result<Trajectory> {
    if z0.len() != sys.phase_dim() {
        return Err(Error::Shape(format!("initial state has {} entries, expected {}", z0.len(), sys.phase_dim())));
    }
    if !(dt > 0.0 && dt.is_finite()) || !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::Shape("dt must be positive and T nonnegative".into()));
    }
    let field = sys.hamilton_vector_field().0;
    let steps = ((t_end / dt) - 1e-9).ceil().max(0.0) as usize;
    let h = if steps == 0 { dt } else { t_end / steps as f64 };
    let monitor = |z: &[f64]| -> Result<Vec<f64>, EvalError> { sys.monitors.iter().map(|(_, q)| q.eval(z)).collect() };
    let exit = |t: f64, z: &[f64], e: EvalError| Error::DomainExit { t, last_state: z.to_vec(), source: e };

    let mut z = z0.to_vec();
    let mut traj = Trajectory {
        dt: h,
        times: vec![0.0],
        states: vec![z.clone()],
        monitor_names: sys.monitors.iter().map(|(n, _)| n.clone()).collect(),
        monitors: vec![monitor(&z).map_err(|e| exit(0.0, &z, e))?],
    };
    let shifted = |z: &[f64], k: &[f64], s: f64| -> Vec<f64> { z.iter().zip(k).map(|(a, b)| a + s * b).collect() };
    for step in 1..=steps {
        let t = (step - 1) as f64 * h;
        let stage = |p: &[f64]| eval_field(&field, p).map_err(|e| exit(t, &z, e));
        let k1 = stage(&z)?;
        let k2 = stage(&shifted(&z, &k1, h / 2.0))?;
        let k3 = stage(&shifted(&z, &k2, h / 2.0))?;
        let k4 = stage(&shifted(&z, &k3, h))?;
        let next: Vec<f64> = (0..z.len())
            .map(|i| z[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect();
        let t_next = step as f64 * h;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { t: t_next, last_state: z });
        }
        let values = monitor(&next).map_err(|e| exit(t, &z, e))?;
        z = next;
        traj.times.push(t_next);
        traj.states.push(z.clone());
        traj.monitors.push(values);
    }
    Ok(traj)
}

/// `max_t |q(z_t) - q(z_0)|` along `traj` for each named quantity.
pub fn conserved_report(traj: &Trajectory, quantities: &[(String, Expr)]) -> Result<Vec<(String, f64)>> {
    quantities
        .iter()
        .map(|(name, q)| {
            let q0 = q.eval(&traj.states[0])?;
            let drift = traj
                .states
                .iter()
                .try_fold(0.0f64, |acc, z| Ok::<_, EvalError>(acc.max((q.eval(z)? - q0).abs())))?;
            Ok((name.clone(), drift))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(i: usize) -> Expr {
        Expr::var(i)
    }

    #[test]
    fn oscillator_shapes() {
        let s = harmonic_oscillator_system(1).unwrap();
        let r2 = x(0).powi(2) + x(1).powi(2);
        assert_eq!(s.anchor()[0][0].eval(&[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(s.hamiltonian(), &r2.ln());
        assert_eq!(s.coord_names(), vec!["x1", "mu1"]);
        let s2 = harmonic_oscillator_system(2).unwrap();
        let h = s2.hamiltonian().eval(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert!((h - 2f64.ln().powi(2)).abs() < 1e-15);
        assert!((0..2).all(|a| (0..2).all(|b| (0..2).all(|g| s2.structure_fn(a, b, g).is_zero()))));
    }

    #[test]
    fn oscillator_field_values() {
        let f = harmonic_oscillator_system(1).unwrap().hamilton_vector_field();
        assert_eq!(f.eval(&[1.0, 0.0]).unwrap(), vec![0.0, -1.0]);
        assert_eq!(f.eval(&[0.0, 1.0]).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn constant_hamiltonian_gives_zero_field() {
        let s = HamiltonianSystem::new(vec![vec![x(0)]], [], Expr::constant(3.0), vec![[0.0, 1.0]; 2]).unwrap();
        assert!(s.hamilton_vector_field().0.iter().all(Expr::is_zero));
        let t = integrate_rk4(&s, &[0.3, 0.2], 0.1, 1.0).unwrap();
        assert!(t.states.iter().all(|z| z == &[0.3, 0.2]));
        assert_eq!(t.times.len(), 11);
        assert_eq!(conserved_report(&t, &[("c".into(), Expr::constant(2.0))]).unwrap()[0].1, 0.0);
    }

    #[test]
    fn structure_terms_enter_momentum_equation() {
        // rank 2 over R^1: rho = (1, 0), C_12^1 = 1, H = mu2.
        let s = HamiltonianSystem::new(
            vec![vec![Expr::one(), Expr::zero()]],
            [(0, 1, 0, Expr::one())],
            x(2),
            vec![[0.0, 1.0]; 3],
        )
        .unwrap();
        let f = s.hamilton_vector_field();
        // dmu_1 = -mu_1 C_12^1 dH/dmu_2 = -mu_1; dmu_2 needs C_22, which vanishes.
        assert_eq!(f.eval(&[0.0, 2.0, 5.0]).unwrap(), vec![0.0, -2.0, 0.0]);
    }

    #[test]
    fn quarter_turn() {
        let s = harmonic_oscillator_system(1).unwrap();
        let t = integrate_rk4(&s, &[1.0, 0.0], 1e-3, std::f64::consts::FRAC_PI_2).unwrap();
        let z = t.final_state();
        assert!((z[0] - 0.0).abs() < 1e-6 && (z[1] + 1.0).abs() < 1e-6);
        assert_eq!(*t.times.last().unwrap(), std::f64::consts::FRAC_PI_2);
    }

    #[test]
    fn leaving_the_domain_is_reported() {
        // dx/dt = -1 with H = mu, rho = 1, monitored ln(x).
        let s = HamiltonianSystem::new(vec![vec![Expr::one()]], [], x(1), vec![[0.0, 1.0]; 2])
            .unwrap()
            .with_monitors(vec![("ln x".into(), x(0).ln())]);
        let s = HamiltonianSystem { hamiltonian: -x(1), ..s };
        let err = integrate_rk4(&s, &[0.5, 0.0], 0.1, 2.0).unwrap_err();
        match err {
            Error::DomainExit { t, last_state, .. } => {
                assert!((t - 0.5).abs() < 1e-12, "{t}");
                assert!(last_state[0] > 0.0);
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn blow_up_is_non_finite() {
        // dx/dt = x^2 blows up at t = 1 from x = 1.
        let s = HamiltonianSystem::new(vec![vec![x(0).powi(2)]], [], x(1), vec![[0.0, 1.0]; 2]).unwrap();
        let err = integrate_rk4(&s, &[1.0, 0.0], 0.5, 40.0).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }), "{err:?}");
    }
}
