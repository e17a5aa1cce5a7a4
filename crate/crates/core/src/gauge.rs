//! Coulomb gauge fixing and the empirical Uhlenbeck and coercivity estimates.
//!
//! The fix `A' = A + dθ` minimises `‖A + dθ‖²` over admissible phases:
//!
//! * Dirichlet: `θ` vanishes on boundary sites, so the tangential boundary
//!   trace is untouched and `d*A' = 0` at every interior site.
//! * Neumann: `θ` is free (normalised to zero mean). The normal equations
//!   `dᵀd θ = −dᵀA` then also kill the boundary rows of `dᵀA'`, which is the
//!   weak form of `A'_ν = 0`.
//!
//! Both are solved by conjugate gradients.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fields::{apply_gauge, curvature, GaugeField, GaugeTransform, SpinorField};
use crate::lattice::{codifferential, d, d_transpose, lp_norm, sobolev_norm, Domain, Form, DIM};
use crate::rng::SplitMix64;

const CG_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Dirichlet,
    Neumann,
}

impl Mode {
    /// Whether the link `(site, axis)` is a free degree of freedom.
    pub fn free_link(self, domain: &Domain, site: usize, axis: usize) -> bool {
        domain.cell_defined(1, site, axis)
            && match self {
                Mode::Neumann => true,
                Mode::Dirichlet => domain.is_interior_cell(1, site, axis),
            }
    }

    /// Whether the spinor at `site` is a free degree of freedom.
    pub fn free_site(self, domain: &Domain, site: usize) -> bool {
        match self {
            Mode::Neumann => true,
            Mode::Dirichlet => domain.is_interior_site(site),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Dirichlet => "dirichlet",
            Mode::Neumann => "neumann",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dirichlet" => Ok(Mode::Dirichlet),
            "neumann" => Ok(Mode::Neumann),
            other => Err(Error::Parse(format!("unknown mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoulombReport {
    /// `‖d*A'‖_{L²}` over interior sites.
    pub div_residual: f64,
    /// Weak normal flux: L² norm over boundary sites of the boundary rows of
    /// `dᵀA'`, weighted as a face integral.
    pub normal_residual: f64,
    /// `max |A'_ν|` over links leaving the box through a face.
    pub normal_link_max: f64,
    /// L² norm of the tangential divergence of the boundary trace.
    pub tangential_residual: f64,
    /// `‖A'‖_{L^{1,2}} / ‖F_{A'}‖_{L²}`; `None` when the curvature vanishes.
    pub uhlenbeck_ratio: Option<f64>,
    pub iterations: usize,
}

/// Conjugate gradients for a symmetric positive semi-definite operator.
/// `project` is applied to every Krylov vector (mean removal, masking).
fn conjugate_gradient(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    project: impl Fn(&mut [f64]),
    rhs: &[f64],
    max_iter: usize,
) -> (Vec<f64>, usize, f64) {
    let n = rhs.len();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut b = rhs.to_vec();
    project(&mut b);
    let bnorm = dot(&b, &b).sqrt();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return (x, 0, 0.0);
    }
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let target = CG_RTOL * bnorm;
    for it in 1..=max_iter {
        let mut ap = apply(&p);
        project(&mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return (x, it, rr.sqrt() / bnorm);
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        if rr_new.sqrt() <= target {
            // Confirm with the true residual.
            let mut ax = apply(&x);
            project(&mut ax);
            let true_r: f64 = b
                .iter()
                .zip(&ax)
                .map(|(bi, ai)| (bi - ai).powi(2))
                .sum::<f64>()
                .sqrt();
            if true_r <= target {
                return (x, it, true_r / bnorm);
            }
            r = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            rr = dot(&r, &r);
            p = r.clone();
            continue;
        }
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
    }
    (x, max_iter, rr.sqrt() / bnorm)
}

fn mean_free(v: &mut [f64]) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    for x in v.iter_mut() {
        *x -= m;
    }
}

/// Sum of squared interior-site divergences, weighted.
fn div_residual(domain: &Domain, a: &GaugeField) -> Result<f64> {
    let div = codifferential(domain, a)?;
    let mut acc = 0.0;
    for s in 0..domain.num_sites() {
        if domain.is_interior_site(s) {
            acc += div.get(s, 0).powi(2);
        }
    }
    Ok((domain.measure() * acc).sqrt())
}

fn normal_residuals(domain: &Domain, a: &GaugeField) -> Result<(f64, f64)> {
    let h = domain.h();
    let full = d_transpose(domain, a)?;
    let mut flux = 0.0;
    let mut link_max = 0.0f64;
    for s in 0..domain.num_sites() {
        if domain.is_interior_site(s) {
            continue;
        }
        flux += (h * full.get(s, 0)).powi(2);
        let x = domain.coords(s);
        for k in 0..DIM {
            if x[k] == 0 || x[k] + 2 == domain.dims()[k] {
                // link crossing the face layer along its normal
                link_max = link_max.max(a.get(s, k).abs());
            }
        }
    }
    Ok(((h.powi(3) * flux).sqrt(), link_max))
}

fn tangential_residual(domain: &Domain, a: &GaugeField) -> f64 {
    let h = domain.h();
    let mut acc = 0.0;
    for s in 0..domain.num_sites() {
        if domain.is_interior_site(s) {
            continue;
        }
        let mut div = 0.0;
        for k in 0..DIM {
            if !domain.interior_along(s, k) {
                continue;
            }
            let b = domain.backward(s, k).expect("interior along axis");
            if domain.is_trace_link(b, k) {
                div += a.get(b, k) / h;
            }
            if domain.is_trace_link(s, k) {
                div -= a.get(s, k) / h;
            }
        }
        acc += div * div;
    }
    (h.powi(3) * acc).sqrt()
}

/// Ratio `‖A‖_{L^{1,p}} / ‖F_A‖_{L^p}`, or `None` when `F_A` is negligible.
pub fn sobolev_curvature_ratio(domain: &Domain, a: &GaugeField, p: f64) -> Result<Option<f64>> {
    let f = curvature(domain, a)?;
    let fnorm = lp_norm(domain, &f, p)?;
    let anorm = lp_norm(domain, a, p)?;
    if fnorm <= 1e-12 * (1.0 + anorm) {
        return Ok(None);
    }
    Ok(Some(sobolev_norm(domain, a, 1, p)? / fnorm))
}

/// `(A + dθ, g, report)` with `A + dθ` in Coulomb gauge.
pub fn coulomb_fix(
    domain: &Domain,
    a: &GaugeField,
    mode: Mode,
) -> Result<(GaugeField, GaugeTransform, CoulombReport)> {
    if a.degree() != 1 {
        return Err(Error::Mismatch("coulomb_fix needs a 1-form".into()));
    }
    let n = domain.num_sites();
    let interior: Vec<bool> = (0..n).map(|s| domain.is_interior_site(s)).collect();
    let lap = |v: &[f64]| -> Vec<f64> {
        let t = Form::from_values(domain, 0, v.to_vec()).expect("site vector");
        let dt = d(domain, &t).expect("0-form");
        d_transpose(domain, &dt).expect("1-form").values().to_vec()
    };
    let rhs: Vec<f64> = d_transpose(domain, a)?
        .values()
        .iter()
        .map(|v| -v)
        .collect();
    let max_iter = 10 * n;
    let (theta, iterations, rel) = match mode {
        Mode::Dirichlet => conjugate_gradient(
            lap,
            |v| {
                for (x, &inside) in v.iter_mut().zip(&interior) {
                    if !inside {
                        *x = 0.0;
                    }
                }
            },
            &rhs,
            max_iter,
        ),
        Mode::Neumann => {
            let (mut th, it, rel) = conjugate_gradient(lap, mean_free, &rhs, max_iter);
            mean_free(&mut th);
            (th, it, rel)
        }
    };
    if !(rel <= CG_RTOL) {
        return Err(Error::GaugeFixFailed {
            iterations,
            residual: rel,
        });
    }
    let g = GaugeTransform::new(theta);
    let dtheta = d(domain, &g.as_form(domain)?)?;
    let mut fixed = a.clone();
    for (v, &dv) in fixed.values_mut().iter_mut().zip(dtheta.values()) {
        if dv != 0.0 {
            *v += dv;
        }
    }
    let (normal_residual, normal_link_max) = normal_residuals(domain, &fixed)?;
    let report = CoulombReport {
        div_residual: div_residual(domain, &fixed)?,
        normal_residual,
        normal_link_max,
        tangential_residual: tangential_residual(domain, &fixed),
        uhlenbeck_ratio: sobolev_curvature_ratio(domain, &fixed, 2.0)?,
        iterations,
    };
    Ok((fixed, g, report))
}

/// `‖g.(A, φ)‖_{L^{1,2}}` for the Coulomb representative of `(A, φ)`.
pub fn coercivity_report(
    domain: &Domain,
    a: &GaugeField,
    phi: &SpinorField,
    mode: Mode,
) -> Result<f64> {
    let (_, g, _) = coulomb_fix(domain, a, mode)?;
    let (a2, phi2) = apply_gauge(domain, &g, a, phi)?;
    Ok(sobolev_norm(domain, &a2, 1, 2.0)? + sobolev_norm(domain, &phi2, 1, 2.0)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UhlenbeckStats {
    pub samples: usize,
    pub skipped: usize,
    pub ratios: Vec<f64>,
    pub min: Option<f64>,
    pub median: Option<f64>,
    pub max: Option<f64>,
}

impl UhlenbeckStats {
    pub fn from_ratios(samples: usize, mut ratios: Vec<f64>) -> Self {
        let skipped = samples - ratios.len();
        let mut sorted = ratios.clone();
        sorted.sort_by(f64::total_cmp);
        let median = if sorted.is_empty() {
            None
        } else if sorted.len() % 2 == 1 {
            Some(sorted[sorted.len() / 2])
        } else {
            Some(0.5 * (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2]))
        };
        ratios.shrink_to_fit();
        Self {
            samples,
            skipped,
            min: sorted.first().copied(),
            max: sorted.last().copied(),
            median,
            ratios,
        }
    }
}

/// Ratio statistics over Coulomb-fixed (Neumann) representatives of the
/// given connections.
pub fn uhlenbeck_stats(
    domain: &Domain,
    connections: &[GaugeField],
    p: f64,
) -> Result<UhlenbeckStats> {
    if !(p == 2.0 || p == 4.0) {
        return Err(Error::Parameter(format!(
            "Uhlenbeck exponent must be 2 or 4, got {p}"
        )));
    }
    let mut ratios = Vec::new();
    for a in connections {
        let (fixed, _, _) = coulomb_fix(domain, a, Mode::Neumann)?;
        if let Some(r) = sobolev_curvature_ratio(domain, &fixed, p)? {
            ratios.push(r);
        }
    }
    Ok(UhlenbeckStats::from_ratios(connections.len(), ratios))
}

/// [`uhlenbeck_stats`] over `ensemble_size` connections with i.i.d.
/// uniform `[-1, 1)` link values.
pub fn uhlenbeck_estimate(
    domain: &Domain,
    ensemble_size: usize,
    p: f64,
    seed: u64,
) -> Result<UhlenbeckStats> {
    let base = SplitMix64::new(seed);
    let ensemble: Vec<GaugeField> = (0..ensemble_size as u64)
        .map(|i| {
            let mut r = base.substream(i);
            Form::from_fn(domain, 1, |_, _| r.symmetric())
        })
        .collect();
    uhlenbeck_stats(domain, &ensemble, p)
}
