//! Depressed-cubic roots and bounds, and the a priori estimate verifiers.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::{
    covariant_derivative, curvature, curvature_component, laplacian, nabla_axis, GaugeField,
    SpinorField,
};
use crate::gauge::Mode;
use crate::lattice::{lp_norm, lp_norm_of_magnitudes, Domain, DIM};
use crate::value::{FieldValue, Spinor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `D ≥ 0`: one real root (three when `D = 0`, counted with multiplicity).
    NonNegative,
    /// `D < 0`: three distinct real roots.
    Negative,
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Branch::NonNegative => "D>=0",
            Branch::Negative => "D<0",
        })
    }
}

/// Roots of `x³ + p x + q = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSolution {
    pub p: f64,
    pub q: f64,
    /// `x_k = λ^k z₁ + λ^{-k} z₂`, `λ = e^{2πi/3}`, for `k = 0, 1, 2`.
    pub roots: [Complex64; 3],
    /// `D = p³/27 + q²/4`.
    pub discriminant: f64,
    pub branch: Branch,
    /// Appendix bound when `p < 0` and `q < 0`.
    pub bound: Option<f64>,
}

impl CubicSolution {
    /// Roots with zero imaginary part, in ascending order.
    pub fn real_roots(&self) -> Vec<f64> {
        let mut r: Vec<f64> = self
            .roots
            .iter()
            .filter(|z| z.im == 0.0)
            .map(|z| z.re)
            .collect();
        r.sort_by(f64::total_cmp);
        r
    }

    /// `|r³ + p r + q|` for each root.
    pub fn residuals(&self) -> [f64; 3] {
        self.roots.map(|r| (r * r * r + r * self.p + self.q).norm())
    }
}

pub fn discriminant(p: f64, q: f64) -> f64 {
    p * p * p / 27.0 + q * q / 4.0
}

/// Cardano roots; the trigonometric form is used when `D < 0`.
pub fn cubic_solve(p: f64, q: f64) -> Result<CubicSolution> {
    if !(p.is_finite() && q.is_finite()) {
        return Err(Error::Parameter(format!(
            "cubic coefficients must be finite: p={p}, q={q}"
        )));
    }
    let dsc = discriminant(p, q);
    let s3 = 3f64.sqrt() / 2.0;
    let (roots, branch) = if dsc >= 0.0 {
        let sd = dsc.sqrt();
        let half = -q / 2.0;
        // Pick the sign that avoids cancellation; z₂ then follows from z₁z₂ = −p/3.
        let u = if half >= 0.0 { half + sd } else { half - sd };
        let z1 = u.cbrt();
        let z2 = if dsc == 0.0 {
            z1
        } else if z1 != 0.0 {
            -p / (3.0 * z1)
        } else {
            0.0
        };
        let re = -(z1 + z2) / 2.0;
        let im = s3 * (z1 - z2);
        (
            [
                Complex64::new(z1 + z2, 0.0),
                Complex64::new(re, im),
                Complex64::new(re, -im),
            ],
            Branch::NonNegative,
        )
    } else {
        // p < 0 here.
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = ((3.0 * q / (2.0 * p)) * (-3.0 / p).sqrt()).clamp(-1.0, 1.0);
        let t = arg.acos() / 3.0;
        let x = |k: f64| m * (t - 2.0 * PI * k / 3.0).cos();
        (
            [
                Complex64::new(x(0.0), 0.0),
                Complex64::new(x(1.0), 0.0),
                Complex64::new(x(2.0), 0.0),
            ],
            Branch::Negative,
        )
    };
    let bound = if p < 0.0 && q < 0.0 {
        Some(cubic_bound(p, q)?.0)
    } else {
        None
    };
    Ok(CubicSolution {
        p,
        q,
        roots,
        discriminant: dsc,
        branch,
        bound,
    })
}

/// Roots from the complex Cardano formula with principal cube roots and
/// `z₂ = −p/(3 z₁)`. Used to cross-check the trigonometric branch.
pub fn cardano_complex_roots(p: f64, q: f64) -> [Complex64; 3] {
    let dsc = Complex64::new(discriminant(p, q), 0.0);
    let w = Complex64::new(-q / 2.0, 0.0) + dsc.sqrt();
    let z1 = w.cbrt();
    let z2 = if z1.norm() == 0.0 {
        (Complex64::new(-q, 0.0) - w).cbrt()
    } else {
        -p / (3.0 * z1)
    };
    let lam = Complex64::cis(2.0 * PI / 3.0);
    let lam2 = lam * lam;
    [z1 + z2, lam * z1 + lam2 * z2, lam2 * z1 + lam * z2]
}

/// Appendix bound on the real roots for `p < 0`, `q < 0`:
/// `8/3 + |q|/3 + q²/12 + p³/81` when `D ≥ 0`, `3 + q²/6 + |p|³/81` when `D < 0`.
pub fn cubic_bound(p: f64, q: f64) -> Result<(f64, Branch)> {
    if !(p < 0.0 && q < 0.0) {
        return Err(Error::OutOfSector { p, q });
    }
    if discriminant(p, q) >= 0.0 {
        Ok((
            8.0 / 3.0 + q.abs() / 3.0 + q * q / 12.0 + p * p * p / 81.0,
            Branch::NonNegative,
        ))
    } else {
        Ok((3.0 + q * q / 6.0 + p.abs().powi(3) / 81.0, Branch::Negative))
    }
}

/// Largest root in `(0, ∞)` of `w³ + k_g w − 4s`, if any.
pub fn largest_positive_root(kg: f64, sigma_abs: f64) -> Result<Option<f64>> {
    if !(sigma_abs >= 0.0) || !kg.is_finite() || !sigma_abs.is_finite() {
        return Err(Error::Parameter(format!(
            "need finite kg and sigma_abs >= 0, got {kg}, {sigma_abs}"
        )));
    }
    let sol = cubic_solve(kg, -4.0 * sigma_abs)?;
    let Some(&w) = sol.real_roots().last() else {
        return Ok(None);
    };
    if w <= 0.0 {
        return Ok(None);
    }
    // Newton polish; the largest positive root is simple.
    let mut w = w;
    for _ in 0..2 {
        let f = w * w * w + kg * w - 4.0 * sigma_abs;
        let df = 3.0 * w * w + kg;
        if df > 0.0 {
            let next = w - f / df;
            if next > 0.0 && next.is_finite() {
                w = next;
            }
        }
    }
    Ok(Some(w))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhiBoundReport {
    pub checked_sites: usize,
    /// `max (|φ(x)| − ρ(x))`, with `ρ = 0` where no positive root exists.
    pub max_violation: f64,
    /// Fraction of checked sites with violation above the slack.
    pub violating_fraction: f64,
    /// `max (|φ|² + k_g)|φ| − 4|σ|`.
    pub max_q_value: f64,
    pub slack: f64,
    pub phi_sup: f64,
    /// `max(0, sqrt(−min k_g))`.
    pub kxg: f64,
    /// `k_{X,g} · vol(X)`.
    pub kxg_vol: f64,
    /// `‖φ‖_∞ ≤ k_{X,g} + slack`, evaluated when `σ ≡ 0`.
    pub sup_bound_ok: Option<bool>,
}

/// Per-site check of `(|φ|² + k_g)|φ| ≤ 4|σ|` through the largest root.
/// Dirichlet mode checks interior sites, Neumann mode every site.
pub fn phi_bound_check(
    domain: &Domain,
    phi: &SpinorField,
    sigma: &SpinorField,
    mode: Mode,
    slack: f64,
) -> Result<PhiBoundReport> {
    let mut checked = 0usize;
    let mut violating = 0usize;
    let mut max_violation = f64::NEG_INFINITY;
    let mut max_q = f64::NEG_INFINITY;
    let mut phi_sup = 0.0f64;
    for s in 0..domain.num_sites() {
        if !mode.free_site(domain, s) {
            continue;
        }
        checked += 1;
        let kg = domain.kg()[s];
        let r = phi.get(s, 0).abs();
        let sa = sigma.get(s, 0).abs();
        let rho = largest_positive_root(kg, sa)?.unwrap_or(0.0);
        let v = r - rho;
        if v > slack {
            violating += 1;
        }
        max_violation = max_violation.max(v);
        max_q = max_q.max((r * r + kg) * r - 4.0 * sa);
        phi_sup = phi_sup.max(r);
    }
    let kg_min = domain.kg().iter().copied().fold(f64::INFINITY, f64::min);
    let kxg = if kg_min < 0.0 { (-kg_min).sqrt() } else { 0.0 };
    let sigma_zero = sigma.values().iter().all(|v| v.norm_sqr() == 0.0);
    Ok(PhiBoundReport {
        checked_sites: checked,
        max_violation,
        violating_fraction: if checked == 0 {
            0.0
        } else {
            violating as f64 / checked as f64
        },
        max_q_value: max_q,
        slack,
        phi_sup,
        kxg,
        kxg_vol: kxg * domain.volume(),
        sup_bound_ok: sigma_zero.then_some(phi_sup <= kxg + slack),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularityReport {
    pub epsilon: f64,
    pub p: f64,
    /// False when the fields are not a solution to the stated tolerance.
    pub applicable: bool,
    pub laplacian_norm: f64,
    pub gradient_norm: f64,
    pub curvature_on_phi_norm: f64,
    pub curvature_on_gradient_norm: f64,
    pub divergence_term_1: f64,
    pub divergence_term_2: f64,
    pub second_derivative_norm: f64,
    /// `(q, ‖F_A‖_{L^q})` for `q = 2, 4, 8`.
    pub curvature_lq: Vec<(f64, f64)>,
    /// Largest pointwise excess of the left side of the second-derivative
    /// estimate over its right side.
    pub estimate_max_excess: f64,
    pub estimate_slack: f64,
    pub estimate_ok: Option<bool>,
    /// `‖F‖_{2p/(2−p)} · ‖∇^A φ‖_{L²}`.
    pub holder_rhs: f64,
    pub holder_ok: bool,
}

/// Site-wise `|Σ_l F_kl v_l|`, `|F|` (full tensor) and `|v|` for a
/// spinor-valued 1-form `v` sampled at base sites.
fn curvature_action(
    domain: &Domain,
    a: &GaugeField,
    v: &[Vec<Spinor>],
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let f = curvature(domain, a)?;
    let n = domain.num_sites();
    let mut fv = vec![0.0; n];
    let mut fmag = vec![0.0; n];
    let mut vmag = vec![0.0; n];
    for s in 0..n {
        let mut acc = 0.0;
        let mut ff = 0.0;
        for k in 0..DIM {
            let mut comp = Spinor::ZERO;
            for l in 0..DIM {
                let fkl = curvature_component(&f, s, k, l);
                ff += fkl * fkl;
                comp += v[l][s] * fkl;
            }
            acc += comp.norm_sqr();
        }
        fv[s] = acc.sqrt();
        fmag[s] = ff.sqrt();
        vmag[s] = (0..DIM).map(|l| v[l][s].norm_sqr()).sum::<f64>().sqrt();
    }
    Ok((fv, fmag, vmag))
}

/// Norms of the second-derivative estimate and checks of the pointwise
/// bound `(1−ε²)|Δ_Aφ|² + (|φ|² + k_g)/4 |∇^Aφ|² ≤ |σ|²/ε²` and of the
/// Hölder bound `‖F(∇^Aφ)‖_p ≤ ‖F‖_{2p/(2−p)} ‖∇^Aφ‖_{L²}`.
///
/// `residual` is the solution residual; the estimate is only claimed when it
/// does not exceed `tol`.
#[allow(clippy::too_many_arguments)]
pub fn regularity_report(
    domain: &Domain,
    a: &GaugeField,
    phi: &SpinorField,
    sigma: &SpinorField,
    epsilon: f64,
    p: f64,
    residual: f64,
    tol: f64,
) -> Result<RegularityReport> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Parameter(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    if !(p > 1.0 && p < 2.0) {
        return Err(Error::Parameter(format!("p must lie in (1, 2), got {p}")));
    }
    let applicable = residual <= tol;
    let n = domain.num_sites();
    let psi = phi.values();
    let lap = laplacian(domain, a, phi)?;
    let grad = covariant_derivative(domain, a, phi)?;
    let nab: Vec<Vec<Spinor>> = (0..DIM).map(|k| nabla_axis(domain, a, psi, k)).collect();
    let nab2: Vec<Vec<Vec<Spinor>>> = (0..DIM)
        .map(|k| {
            (0..DIM)
                .map(|l| nabla_axis(domain, a, &nab[l], k))
                .collect()
        })
        .collect();

    let laplacian_norm = lp_norm(domain, &lap, p)?;
    let gradient_norm = lp_norm(domain, &grad, p)?;
    let second: Vec<f64> = (0..n)
        .map(|s| {
            let mut acc = 0.0;
            for row in &nab2 {
                for col in row {
                    acc += col[s].norm_sqr();
                }
            }
            acc.sqrt()
        })
        .collect();
    let second_derivative_norm = lp_norm_of_magnitudes(domain, &second, p);

    let (f_grad, fmag, gmag) = curvature_action(domain, a, &nab)?;
    let f_phi: Vec<f64> = (0..n).map(|s| fmag[s] * psi[s].abs()).collect();
    let curvature_on_phi_norm = lp_norm_of_magnitudes(domain, &f_phi, p);
    let curvature_on_gradient_norm = lp_norm_of_magnitudes(domain, &f_grad, p);
    let r = 2.0 * p / (2.0 - p);
    let holder_rhs =
        lp_norm_of_magnitudes(domain, &fmag, r) * lp_norm_of_magnitudes(domain, &gmag, 2.0);
    let holder_ok = curvature_on_gradient_norm <= holder_rhs;

    // Divergence terms: forward differences of the scalar pairings.
    let inv_h = 1.0 / domain.h();
    let mut div1 = 0.0;
    let mut div2 = 0.0;
    for k in 0..DIM {
        for l in 0..DIM {
            let g1: Vec<f64> = (0..n).map(|s| nab[k][s].dot(nab2[l][l][s])).collect();
            let g2: Vec<f64> = (0..n).map(|s| nab[k][s].dot(nab2[k][l][s])).collect();
            for s in 0..n {
                if let Some(t) = domain.forward(s, k) {
                    div1 += ((g1[t] - g1[s]) * inv_h).abs().powf(p / 2.0);
                }
                if let Some(t) = domain.forward(s, l) {
                    div2 += ((g2[t] - g2[s]) * inv_h).abs().powf(p / 2.0);
                }
            }
        }
    }
    let w = domain.measure();

    let f = curvature(domain, a)?;
    let curvature_lq = [2.0, 4.0, 8.0]
        .iter()
        .map(|&q| Ok((q, lp_norm(domain, &f, q)?)))
        .collect::<Result<Vec<_>>>()?;

    // Pointwise estimate at interior sites with a site-centred |∇^Aφ|².
    let e2 = epsilon * epsilon;
    let mut excess = f64::NEG_INFINITY;
    let mut scale = 0.0f64;
    for s in 0..n {
        if !domain.is_interior_site(s) {
            continue;
        }
        let mut g2 = 0.0;
        for k in 0..DIM {
            g2 += grad.get(s, k).norm_sqr();
            g2 += grad
                .get(domain.backward(s, k).expect("interior"), k)
                .norm_sqr();
        }
        g2 *= 0.5;
        let v = psi[s];
        let lhs =
            (1.0 - e2) * lap.get(s, 0).norm_sqr() + 0.25 * (v.norm_sqr() + domain.kg()[s]) * g2;
        let rhs = sigma.get(s, 0).norm_sqr() / e2;
        excess = excess.max(lhs - rhs);
        scale = scale.max(lhs.abs()).max(rhs.abs());
    }
    let estimate_slack = 10.0 * tol * (1.0 + scale);
    let kg_nonneg = domain.kg().iter().all(|&k| k >= 0.0);
    Ok(RegularityReport {
        epsilon,
        p,
        applicable,
        laplacian_norm,
        gradient_norm,
        curvature_on_phi_norm,
        curvature_on_gradient_norm,
        divergence_term_1: w * div1,
        divergence_term_2: w * div2,
        second_derivative_norm,
        curvature_lq,
        estimate_max_excess: excess,
        estimate_slack,
        estimate_ok: (applicable && kg_nonneg).then_some(excess <= estimate_slack),
        holder_rhs,
        holder_ok,
    })
}
