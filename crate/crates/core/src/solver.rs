//! Descent solver for the Dirichlet and Neumann problems
//! `grad SW(A, φ) = (Θ, σ)`.
//!
//! The solver minimises
//!
//! ```text
//! J(A, φ) = SW(A, φ) − ½ <Θ, A> − 2 <σ, φ>
//! ```
//!
//! whose metric gradient is `R = grad SW − (Θ, σ)`, by steepest descent with
//! Armijo backtracking over the free degrees of freedom of the mode.

use crate::error::{Error, Result};
use crate::fields::{
    covariant_derivative, phi_star, sup_norm, GaugeField, GaugeTransform, SpinorField,
};
use crate::functional::{sw_energy, sw_gradient, EnergyBreakdown, FieldPair, METRIC_A, METRIC_PHI};
use crate::gauge::{coercivity_report, coulomb_fix, Mode};
use crate::lattice::{inner_product, Domain, Form};
use crate::rng::SplitMix64;
use crate::value::Spinor;

/// Right-hand side `(Θ, σ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SourcePair {
    pub theta: GaugeField,
    pub sigma: SpinorField,
}

impl SourcePair {
    pub fn zeros(domain: &Domain) -> Self {
        Self {
            theta: Form::zeros(domain, 1),
            sigma: Form::zeros(domain, 0),
        }
    }

    pub fn as_pair(&self) -> FieldPair {
        FieldPair::new(self.theta.clone(), self.sigma.clone())
    }

    pub fn l2_norm(&self, domain: &Domain) -> Result<f64> {
        self.as_pair().l2_norm(domain)
    }

    pub fn sigma_sup(&self) -> f64 {
        sup_norm(&self.sigma)
    }
}

/// Prescribed values on the tangential link trace and the boundary sites.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    pub a0: GaugeField,
    pub phi0: SpinorField,
}

impl BoundaryData {
    /// Trace of a configuration; every other slot is zero.
    pub fn trace_of(domain: &Domain, a: &GaugeField, phi: &SpinorField) -> Self {
        Self {
            a0: a.masked(|s, k| domain.is_trace_link(s, k)),
            phi0: phi.masked(|s, _| !domain.is_interior_site(s)),
        }
    }

    /// Copy the boundary values into `x`.
    pub fn impose(&self, domain: &Domain, x: &mut FieldPair) {
        for s in 0..domain.num_sites() {
            for k in 0..4 {
                if domain.is_trace_link(s, k) {
                    x.a.set(s, k, self.a0.get(s, k));
                }
            }
            if !domain.is_interior_site(s) {
                x.phi.set(s, 0, self.phi0.get(s, 0));
            }
        }
    }

    /// Whether `x` carries this trace bitwise.
    pub fn matches(&self, domain: &Domain, x: &FieldPair) -> bool {
        (0..domain.num_sites()).all(|s| {
            (0..4).all(|k| {
                !domain.is_trace_link(s, k)
                    || x.a.get(s, k).to_bits() == self.a0.get(s, k).to_bits()
            }) && (domain.is_interior_site(s) || {
                let (p, q) = (x.phi.get(s, 0), self.phi0.get(s, 0));
                p.0.iter().zip(q.0.iter()).all(|(u, v)| {
                    u.re.to_bits() == v.re.to_bits() && u.im.to_bits() == v.im.to_bits()
                })
            })
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub mode: Mode,
    pub tol: f64,
    pub max_iters: usize,
    pub initial_step: f64,
    pub shrink: f64,
    pub armijo_c: f64,
    pub max_backtracks: usize,
    pub monitor_cadence: usize,
    /// H-condition energy constant `c`.
    pub energy_bound: f64,
    /// H-condition sup-norm constant `c_∞`.
    pub phi_bound: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Neumann,
            tol: 1e-6,
            max_iters: 5000,
            initial_step: 1.0,
            shrink: 0.5,
            armijo_c: 1e-4,
            max_backtracks: 60,
            monitor_cadence: 100,
            energy_bound: 1e6,
            phi_bound: 1e3,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Parameter(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::Parameter(format!(
                "shrink must lie in (0, 1), got {}",
                self.shrink
            )));
        }
        if !(self.initial_step > 0.0) {
            return Err(Error::Parameter("initial_step must be positive".into()));
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return Err(Error::Parameter("armijo_c must lie in (0, 1)".into()));
        }
        if self.monitor_cadence == 0 {
            return Err(Error::Parameter(
                "monitor_cadence must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// `R = grad SW − (Θ, σ)` on the free degrees of freedom.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub r: FieldPair,
    pub l2: f64,
    pub sup: f64,
}

fn restrict(domain: &Domain, mode: Mode, x: &FieldPair) -> FieldPair {
    FieldPair::new(
        x.a.masked(|s, k| mode.free_link(domain, s, k)),
        x.phi.masked(|s, _| mode.free_site(domain, s)),
    )
}

fn check_boundary(mode: Mode, boundary: Option<&BoundaryData>) -> Result<()> {
    match (mode, boundary) {
        (Mode::Dirichlet, None) => Err(Error::MissingBoundary(
            "Dirichlet problems need boundary data".into(),
        )),
        (Mode::Neumann, Some(_)) => Err(Error::Parameter(
            "Neumann problems take no boundary data".into(),
        )),
        _ => Ok(()),
    }
}

fn residual_unchecked(
    domain: &Domain,
    mode: Mode,
    x: &FieldPair,
    source: &SourcePair,
) -> Result<Residual> {
    let g = sw_gradient(domain, &x.a, &x.phi)?;
    let r = restrict(domain, mode, &g.axpy(-1.0, &source.as_pair()));
    let l2 = r.l2_norm(domain)?;
    let sup = r.sup_norm();
    Ok(Residual { r, l2, sup })
}

pub fn residual(
    domain: &Domain,
    mode: Mode,
    a: &GaugeField,
    phi: &SpinorField,
    source: &SourcePair,
    boundary: Option<&BoundaryData>,
) -> Result<Residual> {
    check_boundary(mode, boundary)?;
    residual_unchecked(
        domain,
        mode,
        &FieldPair::new(a.clone(), phi.clone()),
        source,
    )
}

/// Objective `J = SW − ½<Θ, A> − 2<σ, φ>`.
pub fn objective(domain: &Domain, x: &FieldPair, source: &SourcePair) -> Result<f64> {
    let e = sw_energy(domain, &x.a, &x.phi)?.total;
    Ok(e - METRIC_A * inner_product(domain, &source.theta, &x.a)?
        - METRIC_PHI * inner_product(domain, &source.sigma, &x.phi)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    /// Objective `J`; equals the energy when the sources vanish.
    pub energy: f64,
    pub residual_l2: f64,
    pub phi_sup: f64,
    pub coercivity: f64,
    /// Step length that produced this iterate (0 for the start).
    pub step: f64,
}

impl TraceRow {
    pub const CSV_HEADER: &'static str = "iter,energy,residual_l2,phi_sup,coercivity,step";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:e},{:e},{:e},{:e},{:e}",
            self.iter, self.energy, self.residual_l2, self.phi_sup, self.coercivity, self.step
        )
    }

    pub fn parse_csv(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 6 {
            return Err(Error::Parse(format!("trace row needs 6 columns: '{line}'")));
        }
        let num = |i: usize| -> Result<f64> {
            f[i].parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number '{}' in trace", f[i])))
        };
        Ok(TraceRow {
            iter: f[0]
                .parse()
                .map_err(|_| Error::Parse(format!("bad iteration '{}'", f[0])))?,
            energy: num(1)?,
            residual_l2: num(2)?,
            phi_sup: num(3)?,
            coercivity: num(4)?,
            step: num(5)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HConditionReport {
    pub energy_bound_ok: bool,
    pub energy_sup: f64,
    pub sup_norm_ok: bool,
    pub phi_sup: f64,
    pub weak_convergence_gap: f64,
    /// `(iteration, <Φ*(∇^{A_n} φ_n), A_n − A_final>)`.
    pub concentration_trace: Vec<(usize, f64)>,
}

#[derive(Debug, Clone)]
pub struct Solution {
    /// Coulomb-fixed final connection.
    pub a: GaugeField,
    /// Final spinor in the same gauge as `a`.
    pub phi: SpinorField,
    /// Gauge taking the raw final iterate to `(a, phi)`.
    pub gauge: GaugeTransform,
    /// Final iterate before gauge fixing.
    pub raw: FieldPair,
    pub converged: bool,
    pub iterations: usize,
    pub residual_l2: f64,
    pub residual_sup: f64,
    /// Sup of the boundary rows of the residual.
    pub boundary_row_sup: f64,
    pub energy: EnergyBreakdown,
    pub trace: Vec<TraceRow>,
    /// Monitored iterates, final one included.
    pub snapshots: Vec<(usize, FieldPair)>,
    pub report: HConditionReport,
}

/// `16` seeded unit directions (in the configuration metric) supported on
/// the free degrees of freedom.
pub fn test_basket(domain: &Domain, mode: Mode, seed: u64) -> Result<Vec<FieldPair>> {
    let base = SplitMix64::new(seed).substream(0xBA5E);
    (0..16u64)
        .map(|i| {
            let mut r = base.substream(i);
            let a = Form::from_fn(domain, 1, |_, _| r.symmetric());
            let phi = Form::from_fn(domain, 0, |_, _| {
                Spinor::from_parts(r.symmetric(), r.symmetric(), r.symmetric(), r.symmetric())
            });
            let xi = restrict(domain, mode, &FieldPair::new(a, phi));
            let n = xi.pairing(domain, &xi)?.sqrt();
            Ok(xi.scaled(1.0 / n))
        })
        .collect()
}

/// Smooth seed with constant spinor modulus, used for manufactured problems.
pub fn smooth_seed(domain: &Domain) -> FieldPair {
    let a = Form::from_fn(domain, 1, |s, k| {
        let x = domain.position(s);
        0.3 * (x[(k + 1) % 4] + 0.5 * x[(k + 2) % 4]).sin() + 0.1 * k as f64
    });
    let phi = Form::from_fn(domain, 0, |s, _| {
        let x = domain.position(s);
        let psi = 0.3 * (x[0] + 2.0 * x[1]).sin() + 0.2 * (x[2] - x[3]).cos();
        Spinor::from_parts(0.8, 0.0, 0.0, 0.6).rotate(psi)
    });
    FieldPair::new(a, phi)
}

/// Seeded uniform field pair on the free degrees of freedom of `mode`,
/// scaled to L² norm `size`.
pub fn random_perturbation(domain: &Domain, mode: Mode, size: f64, seed: u64) -> Result<FieldPair> {
    let mut r = SplitMix64::new(seed).substream(0x9E27);
    let a = Form::from_fn(domain, 1, |_, _| r.symmetric());
    let phi = Form::from_fn(domain, 0, |_, _| {
        Spinor::from_parts(r.symmetric(), r.symmetric(), r.symmetric(), r.symmetric())
    });
    let xi = restrict(domain, mode, &FieldPair::new(a, phi));
    let n = xi.l2_norm(domain)?;
    Ok(if n > 0.0 { xi.scaled(size / n) } else { xi })
}

/// Evaluate the H-condition clauses on a run.
pub fn h_condition_monitor(
    domain: &Domain,
    config: &SolverConfig,
    trace: &[TraceRow],
    snapshots: &[(usize, FieldPair)],
    final_iterate: &FieldPair,
    source: &SourcePair,
) -> Result<HConditionReport> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let energy_sup = trace
        .iter()
        .map(|t| t.energy)
        .fold(f64::NEG_INFINITY, f64::max);
    let phi_sup = trace.iter().map(|t| t.phi_sup).fold(0.0, f64::max);
    let res = residual_unchecked(domain, config.mode, final_iterate, source)?;
    let mut gap = 0.0f64;
    for xi in test_basket(domain, config.mode, config.seed)? {
        gap = gap.max(res.r.pairing(domain, &xi)?.abs());
    }
    let mut concentration = Vec::with_capacity(snapshots.len());
    for (it, x) in snapshots {
        let grad = covariant_derivative(domain, &x.a, &x.phi)?;
        let ps = phi_star(domain, &x.a, &grad, &x.phi)?;
        let diff = x.a.axpy(-1.0, &final_iterate.a);
        concentration.push((*it, inner_product(domain, &ps, &diff)?));
    }
    Ok(HConditionReport {
        energy_bound_ok: energy_sup.is_finite() && energy_sup < config.energy_bound,
        energy_sup,
        sup_norm_ok: phi_sup < config.phi_bound,
        phi_sup,
        weak_convergence_gap: gap,
        concentration_trace: concentration,
    })
}

/// Source and boundary data for which `(A*, φ*)` is an exact solution.
pub fn manufacture(
    domain: &Domain,
    a_star: &GaugeField,
    phi_star_field: &SpinorField,
    mode: Mode,
) -> Result<(SourcePair, BoundaryData)> {
    let g = sw_gradient(domain, a_star, phi_star_field)?;
    let g = restrict(domain, mode, &g);
    Ok((
        SourcePair {
            theta: g.a,
            sigma: g.phi,
        },
        BoundaryData::trace_of(domain, a_star, phi_star_field),
    ))
}

fn boundary_row_sup(domain: &Domain, r: &FieldPair) -> f64 {
    let mut m = 0.0f64;
    for s in 0..domain.num_sites() {
        if domain.is_interior_site(s) {
            continue;
        }
        m = m.max(r.phi.get(s, 0).abs());
        for k in 0..4 {
            if domain.cell_defined(1, s, k) && !domain.is_interior_cell(1, s, k) {
                m = m.max(r.a.get(s, k).abs());
            }
        }
    }
    m
}

/// Steepest descent with Armijo backtracking from `init`.
pub fn solve(
    domain: &Domain,
    source: &SourcePair,
    boundary: Option<&BoundaryData>,
    init: &FieldPair,
    config: &SolverConfig,
) -> Result<Solution> {
    config.validate()?;
    let mode = config.mode;
    check_boundary(mode, boundary)?;
    let mut x = init.clone();
    if let Some(b) = boundary {
        b.impose(domain, &mut x);
    }
    let mut j = objective(domain, &x, source)?;
    if !j.is_finite() || !x.is_finite() {
        return Err(Error::Aborted {
            iteration: 0,
            reason: "non-finite initial energy".into(),
        });
    }
    let mut trace = Vec::new();
    let mut snapshots = Vec::new();
    let mut last_step = 0.0;
    let mut iter = 0;
    let mut converged;
    let mut res;
    loop {
        res = residual_unchecked(domain, mode, &x, source)?;
        if !res.l2.is_finite() {
            return Err(Error::Aborted {
                iteration: iter,
                reason: "non-finite residual".into(),
            });
        }
        converged = res.l2 <= config.tol;
        let done = converged || iter >= config.max_iters;
        if iter % config.monitor_cadence == 0 || done {
            trace.push(TraceRow {
                iter,
                energy: j,
                residual_l2: res.l2,
                phi_sup: sup_norm(&x.phi),
                coercivity: coercivity_report(domain, &x.a, &x.phi, mode)?,
                step: last_step,
            });
            snapshots.push((iter, x.clone()));
        }
        if done {
            break;
        }
        let slope = res.r.pairing(domain, &res.r)?;
        let mut t = config.initial_step;
        let mut accepted = None;
        for _ in 0..=config.max_backtracks {
            let trial = x.axpy(-t, &res.r);
            let jt = objective(domain, &trial, source)?;
            if jt.is_finite() && jt <= j - config.armijo_c * t * slope {
                accepted = Some((trial, jt));
                break;
            }
            t *= config.shrink;
        }
        let Some((trial, jt)) = accepted else {
            // Line search stalled: report the current iterate unconverged.
            trace.push(TraceRow {
                iter,
                energy: j,
                residual_l2: res.l2,
                phi_sup: sup_norm(&x.phi),
                coercivity: coercivity_report(domain, &x.a, &x.phi, mode)?,
                step: 0.0,
            });
            if snapshots.last().map(|(i, _)| *i) != Some(iter) {
                snapshots.push((iter, x.clone()));
            }
            break;
        };
        x = trial;
        j = jt;
        last_step = t;
        iter += 1;
    }
    let report = h_condition_monitor(domain, config, &trace, &snapshots, &x, source)?;
    let (a_fixed, gauge, _) = coulomb_fix(domain, &x.a, mode)?;
    let phi_fixed = Form::from_fn(domain, 0, |s, _| {
        let v = x.phi.get(s, 0);
        if gauge.theta[s] == 0.0 {
            v
        } else {
            v.rotate(-gauge.theta[s])
        }
    });
    let energy = sw_energy(domain, &a_fixed, &phi_fixed)?;
    Ok(Solution {
        a: a_fixed,
        phi: phi_fixed,
        gauge,
        converged,
        iterations: iter,
        residual_l2: res.l2,
        residual_sup: res.sup,
        boundary_row_sup: boundary_row_sup(domain, &res.r),
        energy,
        trace,
        snapshots,
        report,
        raw: x,
    })
}
