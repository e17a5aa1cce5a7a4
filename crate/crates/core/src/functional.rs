//! The discrete Seiberg–Witten energy
//!
//! ```text
//! SW(A, φ) = h⁴ [ Σ_plaq ¼ F² + Σ_links |∇^A φ|² + Σ_sites (⅛ |φ|⁴ + k_g/4 |φ|²) ] + π² α²
//! ```
//!
//! and its gradient. Configurations are paired with the metric
//!
//! ```text
//! <(Λ, V), (Λ', V')>_C = ½ <Λ, Λ'> + 2 <V, V'>
//! ```
//!
//! under which the gradient takes the familiar form
//! `(d*F + 4 Φ*(∇^A φ), Δ_A φ + (|φ|² + k_g)/4 φ)`, i.e.
//! `dSW·ξ = <grad SW, ξ>_C` exactly.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fields::{
    covariant_codifferential, covariant_derivative, covariant_transpose, curvature, phi_op,
    phi_star, GaugeField, SpinorField,
};
use crate::lattice::{boundary_defect, codifferential, d_transpose, inner_product, Domain, Form};
use crate::value::FieldValue;

/// Weight of the connection part in the configuration metric.
pub const METRIC_A: f64 = 0.5;
/// Weight of the spinor part in the configuration metric.
pub const METRIC_PHI: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    pub curvature: f64,
    pub dirichlet: f64,
    pub quartic: f64,
    pub coupling: f64,
    pub topological: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub const CSV_HEADER: &'static str = "curvature,dirichlet,quartic,coupling,topological,total";

    pub fn csv_row(&self) -> String {
        format!(
            "{:e},{:e},{:e},{:e},{:e},{:e}",
            self.curvature,
            self.dirichlet,
            self.quartic,
            self.coupling,
            self.topological,
            self.total
        )
    }
}

/// A connection together with a spinor field. Used for configurations,
/// tangent directions, gradients and sources alike.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldPair {
    pub a: GaugeField,
    pub phi: SpinorField,
}

impl FieldPair {
    pub fn new(a: GaugeField, phi: SpinorField) -> Self {
        Self { a, phi }
    }

    pub fn zeros(domain: &Domain) -> Self {
        Self {
            a: Form::zeros(domain, 1),
            phi: Form::zeros(domain, 0),
        }
    }

    /// `self + t * other`.
    pub fn axpy(&self, t: f64, other: &FieldPair) -> FieldPair {
        FieldPair {
            a: self.a.axpy(t, &other.a),
            phi: self.phi.axpy(t, &other.phi),
        }
    }

    pub fn scaled(&self, t: f64) -> FieldPair {
        FieldPair {
            a: self.a.scaled(t),
            phi: self.phi.scaled(t),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.phi.is_finite()
    }

    /// Configuration metric `½<Λ,Λ'> + 2<V,V'>`.
    pub fn pairing(&self, domain: &Domain, other: &FieldPair) -> Result<f64> {
        Ok(METRIC_A * inner_product(domain, &self.a, &other.a)?
            + METRIC_PHI * inner_product(domain, &self.phi, &other.phi)?)
    }

    /// Plain L² norm `sqrt(‖Λ‖² + ‖V‖²)`.
    pub fn l2_norm(&self, domain: &Domain) -> Result<f64> {
        Ok((inner_product(domain, &self.a, &self.a)?
            + inner_product(domain, &self.phi, &self.phi)?)
        .sqrt())
    }

    /// Largest coefficient magnitude over both components.
    pub fn sup_norm(&self) -> f64 {
        let a = self.a.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        self.phi.values().iter().fold(a, |m, v| m.max(v.abs()))
    }
}

pub fn sw_energy(domain: &Domain, a: &GaugeField, phi: &SpinorField) -> Result<EnergyBreakdown> {
    let f = curvature(domain, a)?;
    let grad = covariant_derivative(domain, a, phi)?;
    let w = domain.measure();
    let curv = 0.25 * w * f.values().iter().map(|v| v * v).sum::<f64>();
    let dir = w * grad.values().iter().map(|v| v.norm_sqr()).sum::<f64>();
    let mut quartic = 0.0;
    let mut coupling = 0.0;
    for (s, v) in phi.values().iter().enumerate() {
        let n2 = v.norm_sqr();
        quartic += 0.125 * n2 * n2;
        coupling += 0.25 * domain.kg()[s] * n2;
    }
    let quartic = w * quartic;
    let coupling = w * coupling;
    let topological = PI * PI * domain.alpha_sq();
    Ok(EnergyBreakdown {
        curvature: curv,
        dirichlet: dir,
        quartic,
        coupling,
        topological,
        total: curv + dir + quartic + coupling + topological,
    })
}

/// Local potential term `(|φ|² + k_g)/4 · φ`.
fn potential_term(domain: &Domain, phi: &SpinorField) -> SpinorField {
    Form::from_fn(domain, 0, |s, _| {
        let v = phi.get(s, 0);
        v * (0.25 * (v.norm_sqr() + domain.kg()[s]))
    })
}

/// Exact gradient of [`sw_energy`] under the configuration metric, every
/// degree of freedom included.
pub fn sw_gradient(domain: &Domain, a: &GaugeField, phi: &SpinorField) -> Result<FieldPair> {
    let f = curvature(domain, a)?;
    let grad = covariant_derivative(domain, a, phi)?;
    let ga = d_transpose(domain, &f)?.axpy(4.0, &phi_star(domain, a, &grad, phi)?);
    let gphi = covariant_transpose(domain, a, &grad)?.axpy(1.0, &potential_term(domain, phi));
    Ok(FieldPair::new(ga, gphi))
}

/// The gradient assembled from the codifferential and Laplacian operators:
/// `(d*F + 4 Φ*(∇^A φ), Δ_A φ + (|φ|² + k_g)/4 φ)`. Coincides with
/// [`sw_gradient`] on interior cells; boundary rows omit the boundary flux.
pub fn gradient_operator_form(
    domain: &Domain,
    a: &GaugeField,
    phi: &SpinorField,
) -> Result<FieldPair> {
    let f = curvature(domain, a)?;
    let grad = covariant_derivative(domain, a, phi)?;
    let ga = codifferential(domain, &f)?.axpy(4.0, &phi_star(domain, a, &grad, phi)?);
    let gphi = covariant_codifferential(domain, a, &grad)?.axpy(1.0, &potential_term(domain, phi));
    Ok(FieldPair::new(ga, gphi))
}

/// Covariant analogue of the lattice boundary defect:
/// `<∇^A φ, ∇^A V> − <Δ_A φ, V>`.
pub fn covariant_boundary_defect(
    domain: &Domain,
    a: &GaugeField,
    phi: &SpinorField,
    v: &SpinorField,
) -> Result<f64> {
    let gphi = covariant_derivative(domain, a, phi)?;
    let gv = covariant_derivative(domain, a, v)?;
    let lap = covariant_codifferential(domain, a, &gphi)?;
    Ok(inner_product(domain, &gphi, &gv)? - inner_product(domain, &lap, v)?)
}

/// Directional derivative `dSW·(Λ, 0)`:
/// `½ (<d*F, Λ> + ∂-term) + 2 <Φ*(∇^A φ), Λ>`.
pub fn d1(domain: &Domain, a: &GaugeField, phi: &SpinorField, lambda: &GaugeField) -> Result<f64> {
    if lambda.degree() != 1 {
        return Err(Error::Mismatch("direction must be a 1-form".into()));
    }
    let f = curvature(domain, a)?;
    let grad = covariant_derivative(domain, a, phi)?;
    let bulk = inner_product(domain, &codifferential(domain, &f)?, lambda)?;
    let boundary = boundary_defect(domain, lambda, &f)?;
    let coupling = inner_product(domain, &phi_op(domain, a, lambda, phi)?, &grad)?;
    Ok(0.5 * (bulk + boundary) + 2.0 * coupling)
}

/// Directional derivative `dSW·(0, V)`:
/// `2 (<Δ_A φ, V> + ∂-term) + 2 <(|φ|² + k_g)/4 φ, V>`.
pub fn d2(domain: &Domain, a: &GaugeField, phi: &SpinorField, v: &SpinorField) -> Result<f64> {
    if v.degree() != 0 {
        return Err(Error::Mismatch("direction must be a spinor field".into()));
    }
    let grad = covariant_derivative(domain, a, phi)?;
    let bulk = inner_product(domain, &covariant_codifferential(domain, a, &grad)?, v)?;
    let boundary = covariant_boundary_defect(domain, a, phi, v)?;
    let potential = inner_product(domain, &potential_term(domain, phi), v)?;
    Ok(2.0 * (bulk + boundary) + 2.0 * potential)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{apply_gauge, GaugeTransform};
    use crate::lattice::KgSpec;
    use crate::rng::SplitMix64;
    use crate::value::Spinor;

    fn rand_pair(d: &Domain, r: &mut SplitMix64, scale: f64) -> FieldPair {
        let a = Form::from_fn(d, 1, |_, _| scale * r.symmetric());
        let phi = Form::from_fn(d, 0, |_, _| {
            Spinor::from_parts(r.symmetric(), r.symmetric(), r.symmetric(), r.symmetric()) * scale
        });
        FieldPair::new(a, phi)
    }

    #[test]
    fn zero_fields_have_only_topological_energy() {
        let d = Domain::new([3; 4], 1.0, KgSpec::Constant(0.0), 0.0).unwrap();
        let z = FieldPair::zeros(&d);
        assert_eq!(sw_energy(&d, &z.a, &z.phi).unwrap().total, 0.0);
        let d1 = Domain::new([3; 4], 1.0, KgSpec::Constant(0.0), 1.0).unwrap();
        let e = sw_energy(&d1, &z.a, &z.phi).unwrap().total;
        assert!((e - 9.869_604_401_089_358).abs() < 1e-12);
    }

    #[test]
    fn constant_spinor_energy_is_half_volume() {
        let d = Domain::new([4; 4], 0.5, KgSpec::Constant(0.0), 0.0).unwrap();
        let a = GaugeField::zeros(&d, 1);
        let phi = Form::from_fn(&d, 0, |_, _| Spinor::from_parts(1.0, 0.0, 1.0, 0.0));
        let e = sw_energy(&d, &a, &phi).unwrap();
        assert!((e.total - d.volume() / 2.0).abs() < 1e-12);
        assert_eq!(e.dirichlet, 0.0);
    }

    #[test]
    fn constant_spinor_gradient() {
        let d = Domain::new([4; 4], 0.5, KgSpec::Constant(0.7), 0.0).unwrap();
        let a = GaugeField::zeros(&d, 1);
        let c = Spinor::from_parts(0.3, -0.2, 1.1, 0.4);
        let phi = Form::from_fn(&d, 0, |_, _| c);
        let g = sw_gradient(&d, &a, &phi).unwrap();
        let expect = c * ((c.norm_sqr() + 0.7) / 4.0);
        for s in 0..d.num_sites() {
            assert!((g.phi.get(s, 0) - expect).abs() < 1e-15);
        }
        assert!(g.a.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_matches_central_differences() {
        let d = Domain::new([3; 4], 0.8, KgSpec::Constant(-0.5), 0.3).unwrap();
        let mut r = SplitMix64::new(99);
        let x = rand_pair(&d, &mut r, 1.0);
        let g = sw_gradient(&d, &x.a, &x.phi).unwrap();
        for _ in 0..5 {
            let xi = rand_pair(&d, &mut r, 1.0);
            let t = 1e-5;
            let p = x.axpy(t, &xi);
            let m = x.axpy(-t, &xi);
            let fd = (sw_energy(&d, &p.a, &p.phi).unwrap().total
                - sw_energy(&d, &m.a, &m.phi).unwrap().total)
                / (2.0 * t);
            let an = g.pairing(&d, &xi).unwrap();
            assert!((fd - an).abs() <= 1e-6 * (1.0 + an.abs()), "{fd} vs {an}");
        }
    }

    #[test]
    fn directional_derivatives_sum_to_pairing() {
        let d = Domain::new([4; 4], 0.6, KgSpec::Constant(0.2), 0.0).unwrap();
        let mut r = SplitMix64::new(5);
        let x = rand_pair(&d, &mut r, 0.8);
        let xi = rand_pair(&d, &mut r, 1.0);
        let g = sw_gradient(&d, &x.a, &x.phi).unwrap();
        let lhs = d1(&d, &x.a, &x.phi, &xi.a).unwrap() + d2(&d, &x.a, &x.phi, &xi.phi).unwrap();
        let rhs = g.pairing(&d, &xi).unwrap();
        assert!((lhs - rhs).abs() <= 1e-11 * (1.0 + rhs.abs()));
    }

    #[test]
    fn operator_form_agrees_inside() {
        let d = Domain::new([4; 4], 0.6, KgSpec::Constant(0.2), 0.0).unwrap();
        let mut r = SplitMix64::new(15);
        let x = rand_pair(&d, &mut r, 1.0);
        let g = sw_gradient(&d, &x.a, &x.phi).unwrap();
        let o = gradient_operator_form(&d, &x.a, &x.phi).unwrap();
        for s in 0..d.num_sites() {
            if d.is_interior_site(s) {
                assert!((g.phi.get(s, 0) - o.phi.get(s, 0)).abs() < 1e-12);
            }
            for k in 0..4 {
                if d.cell_defined(1, s, k) && d.is_interior_cell(1, s, k) {
                    assert!((g.a.get(s, k) - o.a.get(s, k)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn energy_is_gauge_invariant() {
        let d = Domain::new([3; 4], 0.5, KgSpec::Constant(1.0), 0.0).unwrap();
        let mut r = SplitMix64::new(31);
        let x = rand_pair(&d, &mut r, 1.0);
        let g = GaugeTransform::new((0..d.num_sites()).map(|_| 2.0 * r.symmetric()).collect());
        let (a2, p2) = apply_gauge(&d, &g, &x.a, &x.phi).unwrap();
        let e1 = sw_energy(&d, &x.a, &x.phi).unwrap().total;
        let e2 = sw_energy(&d, &a2, &p2).unwrap().total;
        assert!((e1 - e2).abs() <= 1e-12 * (1.0 + e1.abs()));
    }
}
