//! Gauge and spinor fields, the compact-link covariant derivative, curvature,
//! the covariant Laplacian and the `Φ`/`Φ*` pair.
//!
//! A connection is stored as one real per link (the coefficient `a` of
//! `A = i a`). Parallel transport along the link `(x, k)` is
//! `U_k(x) = exp(i h a_k(x))` and
//!
//! ```text
//! (∇^A φ)_k(x) = (U_k(x) φ(x + e_k) − φ(x)) / h
//! ```

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{self, plaquette_index, Domain, Form, DIM};
use crate::value::{FieldValue, Spinor};

/// Real coefficient per link.
pub type GaugeField = Form<f64>;
/// One C² value per site.
pub type SpinorField = Form<Spinor>;
/// Real coefficient per plaquette.
pub type Curvature = Form<f64>;
/// Spinor-valued 1-form, e.g. `∇^A φ`.
pub type SpinorOneForm = Form<Spinor>;

/// `g(x) = exp(i θ(x))`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeTransform {
    pub theta: Vec<f64>,
}

impl GaugeTransform {
    pub fn new(theta: Vec<f64>) -> Self {
        Self { theta }
    }

    pub fn identity(domain: &Domain) -> Self {
        Self {
            theta: vec![0.0; domain.num_sites()],
        }
    }

    pub fn compose(&self, other: &GaugeTransform) -> GaugeTransform {
        GaugeTransform {
            theta: self
                .theta
                .iter()
                .zip(&other.theta)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn as_form(&self, domain: &Domain) -> Result<Form<f64>> {
        Form::from_values(domain, 0, self.theta.clone())
    }
}

fn expect_degree<T: FieldValue>(f: &Form<T>, degree: usize, what: &str) -> Result<()> {
    if f.degree() != degree {
        return Err(Error::Mismatch(format!(
            "{what} must have degree {degree}, got {}",
            f.degree()
        )));
    }
    Ok(())
}

fn check_pair(domain: &Domain, a: &GaugeField, phi: &SpinorField) -> Result<()> {
    expect_degree(a, 1, "connection")?;
    expect_degree(phi, 0, "spinor field")?;
    if a.values().len() != domain.num_sites() * DIM || phi.values().len() != domain.num_sites() {
        return Err(Error::Mismatch("fields do not live on this domain".into()));
    }
    Ok(())
}

/// Link transport `exp(i h a_k(x))`.
pub fn link_phase(domain: &Domain, a: &GaugeField, site: usize, axis: usize) -> Complex64 {
    Complex64::cis(domain.h() * a.get(site, axis))
}

/// Spinor at `x + e_k` transported back to `x`, or `None` at the far face.
pub fn transported(
    domain: &Domain,
    a: &GaugeField,
    phi: &SpinorField,
    site: usize,
    axis: usize,
) -> Option<Spinor> {
    domain
        .forward(site, axis)
        .map(|t| phi.get(t, 0).scale(link_phase(domain, a, site, axis)))
}

pub fn covariant_derivative(
    domain: &Domain,
    a: &GaugeField,
    phi: &SpinorField,
) -> Result<SpinorOneForm> {
    check_pair(domain, a, phi)?;
    let inv_h = 1.0 / domain.h();
    Ok(Form::from_fn(domain, 1, |s, k| {
        let up = transported(domain, a, phi, s, k).expect("defined link");
        (up - phi.get(s, 0)) * inv_h
    }))
}

fn covariant_adjoint(
    domain: &Domain,
    a: &GaugeField,
    w: &SpinorOneForm,
    complete_only: bool,
) -> Result<SpinorField> {
    expect_degree(a, 1, "connection")?;
    expect_degree(w, 1, "spinor 1-form")?;
    let inv_h = 1.0 / domain.h();
    Ok(Form::from_fn(domain, 0, |y, _| {
        let mut acc = Spinor::ZERO;
        for k in 0..DIM {
            if complete_only && !domain.interior_along(y, k) {
                continue;
            }
            if let Some(b) = domain.backward(y, k) {
                acc += w.get(b, k).scale(link_phase(domain, a, b, k).conj());
            }
            if domain.cell_defined(1, y, k) {
                acc -= w.get(y, k);
            }
        }
        acc * inv_h
    }))
}

/// Exact transpose of [`covariant_derivative`], boundary rows included.
pub fn covariant_transpose(
    domain: &Domain,
    a: &GaugeField,
    w: &SpinorOneForm,
) -> Result<SpinorField> {
    covariant_adjoint(domain, a, w, false)
}

/// Covariant codifferential: backward differences kept only in directions
/// with a complete stencil.
pub fn covariant_codifferential(
    domain: &Domain,
    a: &GaugeField,
    w: &SpinorOneForm,
) -> Result<SpinorField> {
    covariant_adjoint(domain, a, w, true)
}

/// `Δ_A φ = (∇^A)* ∇^A φ`.
pub fn laplacian(domain: &Domain, a: &GaugeField, phi: &SpinorField) -> Result<SpinorField> {
    let grad = covariant_derivative(domain, a, phi)?;
    covariant_codifferential(domain, a, &grad)
}

pub fn curvature(domain: &Domain, a: &GaugeField) -> Result<Curvature> {
    expect_degree(a, 1, "connection")?;
    lattice::d(domain, a)
}

/// `F_kl` at a site for an arbitrary ordered pair of axes.
pub fn curvature_component(f: &Curvature, site: usize, k: usize, l: usize) -> f64 {
    if k == l {
        return 0.0;
    }
    let (c, sign) = plaquette_index(k, l);
    sign * f.get(site, c)
}

/// `Φ(Λ)_k(x) = Λ_k(x) · i U_k(x) φ(x + e_k)`: the variation of `∇^A φ`
/// under `A → A + Λ`.
pub fn phi_op(
    domain: &Domain,
    a: &GaugeField,
    lambda: &GaugeField,
    phi: &SpinorField,
) -> Result<SpinorOneForm> {
    check_pair(domain, a, phi)?;
    expect_degree(lambda, 1, "direction")?;
    Ok(Form::from_fn(domain, 1, |s, k| {
        transported(domain, a, phi, s, k)
            .expect("defined link")
            .mul_i()
            * lambda.get(s, k)
    }))
}

/// Adjoint of [`phi_op`]: `Φ*(W)_k(x) = Re<i U_k(x) φ(x + e_k), W_k(x)>`.
pub fn phi_star(
    domain: &Domain,
    a: &GaugeField,
    w: &SpinorOneForm,
    phi: &SpinorField,
) -> Result<GaugeField> {
    check_pair(domain, a, phi)?;
    expect_degree(w, 1, "spinor 1-form")?;
    Ok(Form::from_fn(domain, 1, |s, k| {
        transported(domain, a, phi, s, k)
            .expect("defined link")
            .mul_i()
            .dot(w.get(s, k))
    }))
}

/// `Σ_k Re<U_k(x) φ(x + e_k), W_k(x)>` per link: the lattice form of
/// `Re<φ, ∇φ>`, which tends to `½ d|φ|²` when `W = ∇^A φ`.
pub fn transported_pairing(
    domain: &Domain,
    a: &GaugeField,
    w: &SpinorOneForm,
    phi: &SpinorField,
) -> Result<GaugeField> {
    check_pair(domain, a, phi)?;
    Ok(Form::from_fn(domain, 1, |s, k| {
        transported(domain, a, phi, s, k)
            .expect("defined link")
            .dot(w.get(s, k))
    }))
}

/// `(A + dθ, e^{−iθ} φ)`. Cells where `dθ` or `θ` vanish are copied
/// bitwise.
pub fn apply_gauge(
    domain: &Domain,
    g: &GaugeTransform,
    a: &GaugeField,
    phi: &SpinorField,
) -> Result<(GaugeField, SpinorField)> {
    check_pair(domain, a, phi)?;
    let theta = g.as_form(domain)?;
    let dtheta = lattice::d(domain, &theta)?;
    let mut a2 = a.clone();
    for (v, &dv) in a2.values_mut().iter_mut().zip(dtheta.values()) {
        if dv != 0.0 {
            *v += dv;
        }
    }
    let phi2 = Form::from_fn(domain, 0, |s, _| {
        let v = phi.get(s, 0);
        if g.theta[s] == 0.0 {
            v
        } else {
            v.rotate(-g.theta[s])
        }
    });
    Ok((a2, phi2))
}

/// Covariant difference along one axis as a site field; zero where the
/// forward neighbour is missing.
pub fn nabla_axis(domain: &Domain, a: &GaugeField, psi: &[Spinor], axis: usize) -> Vec<Spinor> {
    let inv_h = 1.0 / domain.h();
    (0..domain.num_sites())
        .map(|s| match domain.forward(s, axis) {
            Some(t) => (psi[t].scale(link_phase(domain, a, s, axis)) - psi[s]) * inv_h,
            None => Spinor::ZERO,
        })
        .collect()
}

/// `(∇_l ∇_k − ∇_k ∇_l) φ − i F_lk φ` at every site where both second
/// differences are complete; other sites hold zero.
pub fn commutator_defect(
    domain: &Domain,
    a: &GaugeField,
    phi: &SpinorField,
    k: usize,
    l: usize,
) -> Result<SpinorField> {
    check_pair(domain, a, phi)?;
    let f = curvature(domain, a)?;
    let psi = phi.values();
    let dk = nabla_axis(domain, a, psi, k);
    let dl = nabla_axis(domain, a, psi, l);
    let lk = nabla_axis(domain, a, &dk, l);
    let kl = nabla_axis(domain, a, &dl, k);
    Ok(Form::from_fn(domain, 0, |s, _| {
        let complete = domain
            .forward(s, k)
            .and_then(|t| domain.forward(t, l))
            .is_some();
        if !complete || k == l {
            return Spinor::ZERO;
        }
        let comm = lk[s] - kl[s];
        comm - phi.get(s, 0).mul_i() * curvature_component(&f, s, l, k)
    }))
}

/// Sup over sites of `|φ|`.
pub fn sup_norm(phi: &SpinorField) -> f64 {
    phi.values().iter().fold(0.0, |m, v| m.max(v.abs()))
}
