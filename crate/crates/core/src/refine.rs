//! Grid-refinement studies on analytic seed fields.
//!
//! Each study samples closed-form fields on boxes of side `length` at a
//! sequence of spacings, measures an `L²` discrepancy and reports the
//! observed order `min_i log(e_i / e_{i+1}) / log(h_i / h_{i+1})`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fields::{
    commutator_defect, covariant_derivative, transported_pairing, GaugeField, SpinorField,
};
use crate::functional::sw_gradient;
use crate::lattice::{self, Domain, Form, KgSpec, DIM};
use crate::value::{FieldValue, Spinor};

use num_complex::Complex64;

/// Errors at or below this level count as exact.
const EXACT_FLOOR: f64 = 1e-13;
/// Finite-difference step for derivatives of the analytic seeds.
const FD_STEP: f64 = 1e-3;

pub type Point = [f64; DIM];

/// Closed-form connection and spinor.
#[derive(Clone, Copy)]
pub struct AnalyticSeed {
    pub a: fn(Point) -> Point,
    pub phi: fn(Point) -> Spinor,
}

impl fmt::Debug for AnalyticSeed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("AnalyticSeed")
    }
}

fn smooth_a(x: Point) -> Point {
    [
        0.5 * (x[1] + 0.3).sin() + 0.2 * x[2] * x[3],
        0.4 * (x[2] - x[0]).cos(),
        0.3 * x[0] * x[0] - 0.2 * (x[3]).sin(),
        0.25 * (x[0] + x[1] + 0.5 * x[2]).sin(),
    ]
}

fn smooth_phi(x: Point) -> Spinor {
    Spinor::new(
        Complex64::new((x[0] + 0.5 * x[1]).cos(), 0.3 * x[2] + 0.1 * x[3]),
        Complex64::cis(x[3] - x[0]) * 0.5 + Complex64::new(0.2 * x[1], 0.0),
    )
}

fn linear_a(x: Point) -> Point {
    [x[1], 0.0, 0.0, 0.0]
}

impl AnalyticSeed {
    /// Generic smooth fields with every component varying.
    pub fn standard() -> Self {
        Self {
            a: smooth_a,
            phi: smooth_phi,
        }
    }

    /// `A₁ = x₂` with the standard spinor.
    pub fn linear_connection() -> Self {
        Self {
            a: linear_a,
            phi: smooth_phi,
        }
    }

    /// Links sampled at their midpoints, spinors at sites.
    pub fn sample(&self, domain: &Domain) -> (GaugeField, SpinorField) {
        let h = domain.h();
        let a = Form::from_fn(domain, 1, |s, k| {
            let mut x = domain.position(s);
            x[k] += 0.5 * h;
            (self.a)(x)[k]
        });
        let phi = Form::from_fn(domain, 0, |s, _| (self.phi)(domain.position(s)));
        (a, phi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Study {
    Commutator,
    PhiStar,
    GradientOperator,
}

impl Study {
    pub const ALL: [Study; 3] = [Study::Commutator, Study::PhiStar, Study::GradientOperator];
}

impl fmt::Display for Study {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Study::Commutator => "commutator",
            Study::PhiStar => "phi-star",
            Study::GradientOperator => "gradient-operator",
        })
    }
}

impl FromStr for Study {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "commutator" => Ok(Study::Commutator),
            "phi-star" => Ok(Study::PhiStar),
            "gradient-operator" => Ok(Study::GradientOperator),
            other => Err(Error::Parse(format!("unknown refinement study '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementResult {
    pub study: Study,
    pub spacings: Vec<f64>,
    pub errors: Vec<f64>,
    /// Pairwise orders between consecutive levels.
    pub orders: Vec<f64>,
    /// Smallest pairwise order; infinite when every level is exact.
    pub observed_order: f64,
}

/// Pairwise orders and their minimum.
pub fn observed_order(spacings: &[f64], errors: &[f64]) -> Result<(Vec<f64>, f64)> {
    if spacings.len() < 3 || errors.len() != spacings.len() {
        return Err(Error::TooFewLevels(spacings.len().min(errors.len())));
    }
    let orders: Vec<f64> = (0..spacings.len() - 1)
        .map(|i| {
            let (e0, e1) = (errors[i], errors[i + 1]);
            if e1 <= EXACT_FLOOR {
                f64::INFINITY
            } else if e0 <= EXACT_FLOOR {
                f64::NEG_INFINITY
            } else {
                (e0 / e1).ln() / (spacings[i] / spacings[i + 1]).ln()
            }
        })
        .collect();
    let min = orders.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((orders, min))
}

/// Box with side `length` and spacing `h`.
pub fn box_domain(length: f64, h: f64, kg: f64) -> Result<Domain> {
    let n = (length / h).round() as usize + 1;
    Domain::new([n; DIM], h, KgSpec::Constant(kg), 0.0)
}

/// `‖(∇_l∇_k − ∇_k∇_l)φ − i F_lk φ‖` summed over ordered axis pairs.
pub fn commutator_error(domain: &Domain, a: &GaugeField, phi: &SpinorField) -> Result<f64> {
    let mut acc = 0.0;
    for k in 0..DIM {
        for l in 0..DIM {
            if k != l {
                let c = commutator_defect(domain, a, phi, k, l)?;
                acc += c.values().iter().map(|v| v.norm_sqr()).sum::<f64>();
            }
        }
    }
    Ok((domain.measure() * acc).sqrt())
}

/// `‖Re<Uφ(x+e_k), ∇_kφ> − ½ d|φ|²‖`.
pub fn phi_star_identity_error(domain: &Domain, a: &GaugeField, phi: &SpinorField) -> Result<f64> {
    let grad = covariant_derivative(domain, a, phi)?;
    let lhs = transported_pairing(domain, a, &grad, phi)?;
    let mod2 = phi.map(|v| v.norm_sqr());
    let rhs = lattice::d(domain, &mod2)?.scaled(0.5);
    lattice::lp_norm(domain, &lhs.axpy(-1.0, &rhs), 2.0)
}

fn shifted(x: Point, k: usize, t: f64) -> Point {
    let mut y = x;
    y[k] += t;
    y
}

/// Fourth-order central first derivative along `k`.
fn d1_fd<T: FieldValue>(f: &dyn Fn(Point) -> T, x: Point, k: usize) -> T {
    let s = FD_STEP;
    (f(shifted(x, k, -2.0 * s)) - f(shifted(x, k, 2.0 * s))
        + (f(shifted(x, k, s)) - f(shifted(x, k, -s))) * 8.0)
        * (1.0 / (12.0 * s))
}

/// Fourth-order central second derivative along `k`.
fn d2_fd<T: FieldValue>(f: &dyn Fn(Point) -> T, x: Point, k: usize) -> T {
    let s = FD_STEP;
    ((f(shifted(x, k, s)) + f(shifted(x, k, -s))) * 16.0
        - f(shifted(x, k, 2.0 * s))
        - f(shifted(x, k, -2.0 * s))
        - f(x) * 30.0)
        * (1.0 / (12.0 * s * s))
}

/// Continuum `F_kl = ∂_k A_l − ∂_l A_k`.
fn continuum_f(seed: &AnalyticSeed, x: Point, k: usize, l: usize) -> f64 {
    let al = |y: Point| (seed.a)(y)[l];
    let ak = |y: Point| (seed.a)(y)[k];
    d1_fd(&al, x, k) - d1_fd(&ak, x, l)
}

/// Continuum `∇_k φ = ∂_k φ + i a_k φ`.
fn continuum_nabla(seed: &AnalyticSeed, x: Point, k: usize) -> Spinor {
    let phi = |y: Point| (seed.phi)(y);
    d1_fd(&phi, x, k) + (seed.phi)(x).mul_i() * (seed.a)(x)[k]
}

/// Continuum gradient `(d*F + 4Φ*(∇^Aφ))_k` at `x`.
fn continuum_grad_a(seed: &AnalyticSeed, x: Point, k: usize) -> f64 {
    let mut div = 0.0;
    for l in 0..DIM {
        if l != k {
            let f = |y: Point| continuum_f(seed, y, l, k);
            div -= d1_fd(&f, x, l);
        }
    }
    let phi = (seed.phi)(x);
    div + 4.0 * phi.mul_i().dot(continuum_nabla(seed, x, k))
}

/// Continuum `Δ_A φ + (|φ|² + k_g)/4 φ` at `x`, with
/// `∇_k∇_k φ = ∂²φ + 2i a ∂φ + i (∂a) φ − a² φ`.
fn continuum_grad_phi(seed: &AnalyticSeed, x: Point, kg: f64) -> Spinor {
    let phi = |y: Point| (seed.phi)(y);
    let v = phi(x);
    let a = (seed.a)(x);
    let mut lap = Spinor::ZERO;
    for k in 0..DIM {
        let ak = |y: Point| (seed.a)(y)[k];
        let dak = d1_fd(&ak, x, k);
        let dphi = d1_fd(&phi, x, k);
        let nn =
            d2_fd(&phi, x, k) + dphi.mul_i() * (2.0 * a[k]) + v.mul_i() * dak - v * (a[k] * a[k]);
        lap -= nn;
    }
    lap + v * (0.25 * (v.norm_sqr() + kg))
}

/// L² distance on interior cells between the exact discrete gradient and
/// the continuum gradient sampled at link midpoints and sites.
pub fn gradient_operator_error(domain: &Domain, seed: &AnalyticSeed) -> Result<f64> {
    let (a, phi) = seed.sample(domain);
    let g = sw_gradient(domain, &a, &phi)?;
    let h = domain.h();
    let kg = domain.kg();
    let mut acc = 0.0;
    for s in 0..domain.num_sites() {
        let x = domain.position(s);
        for k in 0..DIM {
            if domain.cell_defined(1, s, k) && domain.is_interior_cell(1, s, k) {
                let c = continuum_grad_a(seed, shifted(x, k, 0.5 * h), k);
                acc += (g.a.get(s, k) - c).powi(2);
            }
        }
        if domain.is_interior_site(s) {
            let c = continuum_grad_phi(seed, x, kg[s]);
            acc += (g.phi.get(s, 0) - c).norm_sqr();
        }
    }
    Ok((domain.measure() * acc).sqrt())
}

/// Run one study on boxes of side `length` at the given spacings.
pub fn run_study(study: Study, spacings: &[f64], length: f64) -> Result<RefinementResult> {
    if spacings.len() < 3 {
        return Err(Error::TooFewLevels(spacings.len()));
    }
    let mut errors = Vec::with_capacity(spacings.len());
    for &h in spacings {
        let domain = box_domain(length, h, 1.0)?;
        let e = match study {
            Study::Commutator => {
                let (a, phi) = AnalyticSeed::linear_connection().sample(&domain);
                commutator_error(&domain, &a, &phi)?
            }
            Study::PhiStar => {
                let (a, phi) = AnalyticSeed::standard().sample(&domain);
                phi_star_identity_error(&domain, &a, &phi)?
            }
            Study::GradientOperator => gradient_operator_error(&domain, &AnalyticSeed::standard())?,
        };
        errors.push(e);
    }
    let (orders, observed) = observed_order(spacings, &errors)?;
    Ok(RefinementResult {
        study,
        spacings: spacings.to_vec(),
        errors,
        orders,
        observed_order: observed,
    })
}

/// Commutator study for arbitrary sampled fields, one pair per spacing.
pub fn commutator_check(levels: &[(Domain, GaugeField, SpinorField)]) -> Result<RefinementResult> {
    if levels.len() < 3 {
        return Err(Error::TooFewLevels(levels.len()));
    }
    let spacings: Vec<f64> = levels.iter().map(|(d, _, _)| d.h()).collect();
    let errors = levels
        .iter()
        .map(|(d, a, phi)| commutator_error(d, a, phi))
        .collect::<Result<Vec<_>>>()?;
    let (orders, observed) = observed_order(&spacings, &errors)?;
    Ok(RefinementResult {
        study: Study::Commutator,
        spacings,
        errors,
        orders,
        observed_order: observed,
    })
}
