//! Four-dimensional box lattices and the discrete differential-forms calculus
//! built on them.
//!
//! An `r`-cell is a pair `(x, I)` of a base site `x` and an increasing set of
//! `r` axes `I`; it is in the domain when `x + e_i` is a site for every
//! `i ∈ I`. Forms store one coefficient per `(site, axis set)` slot in
//! lexicographic site order (x₁ fastest), axis sets in the order of
//! [`axis_sets`]. Slots of cells that fall outside the box hold zero.
//!
//! `d` uses forward differences. [`d_transpose`] is its exact transpose with
//! respect to [`inner_product`], boundary rows included. [`codifferential`] is
//! the backward-difference formula that only keeps the directions in which
//! the stencil is complete; it agrees with `d_transpose` on interior cells and
//! the difference between the two is the discrete boundary integral returned
//! by [`boundary_defect`].

use crate::error::{Error, Result};
use crate::value::FieldValue;

pub const DIM: usize = 4;

const SETS0: &[&[usize]] = &[&[]];
const SETS1: &[&[usize]] = &[&[0], &[1], &[2], &[3]];
const SETS2: &[&[usize]] = &[&[0, 1], &[0, 2], &[0, 3], &[1, 2], &[1, 3], &[2, 3]];
const SETS3: &[&[usize]] = &[&[0, 1, 2], &[0, 1, 3], &[0, 2, 3], &[1, 2, 3]];
const SETS4: &[&[usize]] = &[&[0, 1, 2, 3]];

/// Increasing axis sets of size `degree`, in storage order.
pub fn axis_sets(degree: usize) -> &'static [&'static [usize]] {
    match degree {
        0 => SETS0,
        1 => SETS1,
        2 => SETS2,
        3 => SETS3,
        4 => SETS4,
        _ => &[],
    }
}

/// Storage index of an increasing axis set.
pub fn axis_set_index(axes: &[usize]) -> usize {
    axis_sets(axes.len())
        .iter()
        .position(|s| *s == axes)
        .expect("axis set must be increasing and in range")
}

/// Storage index of the plaquette spanned by two distinct axes, with the sign
/// of the orientation relative to the stored increasing order.
pub fn plaquette_index(k: usize, l: usize) -> (usize, f64) {
    if k < l {
        (axis_set_index(&[k, l]), 1.0)
    } else {
        (axis_set_index(&[l, k]), -1.0)
    }
}

/// Scalar curvature data: one value everywhere or one value per site.
#[derive(Debug, Clone, PartialEq)]
pub enum KgSpec {
    Constant(f64),
    Table(Vec<f64>),
}

/// Where a site sits in the box.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SiteKind {
    Interior,
    /// Outward normals as `(axis, sign)` with `sign = ±1`.
    Boundary(Vec<(usize, i8)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    dims: [usize; DIM],
    h: f64,
    kg: Vec<f64>,
    alpha_sq: f64,
    strides: [usize; DIM],
    n_sites: usize,
}

impl Domain {
    pub fn new(dims: [usize; DIM], h: f64, kg: KgSpec, alpha_sq: f64) -> Result<Self> {
        if let Some(d) = dims.iter().find(|&&d| d < 3) {
            return Err(Error::InvalidDomain(format!(
                "every axis needs at least 3 sites, got {d} in {dims:?}"
            )));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidDomain(format!(
                "spacing must be positive, got {h}"
            )));
        }
        if !alpha_sq.is_finite() {
            return Err(Error::InvalidDomain("alpha_sq must be finite".into()));
        }
        let n_sites: usize = dims.iter().product();
        let strides = [1, dims[0], dims[0] * dims[1], dims[0] * dims[1] * dims[2]];
        let kg = match kg {
            KgSpec::Constant(c) => {
                if !c.is_finite() {
                    return Err(Error::InvalidDomain("kg must be finite".into()));
                }
                vec![c; n_sites]
            }
            KgSpec::Table(t) => {
                if t.len() != n_sites {
                    return Err(Error::InvalidDomain(format!(
                        "kg table has {} entries, domain has {n_sites} sites",
                        t.len()
                    )));
                }
                if t.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidDomain(
                        "kg table has non-finite entries".into(),
                    ));
                }
                t
            }
        };
        Ok(Self {
            dims,
            h,
            kg,
            alpha_sq,
            strides,
            n_sites,
        })
    }

    /// Same grid and data with a different spacing.
    pub fn with_spacing(&self, h: f64) -> Result<Self> {
        Domain::new(self.dims, h, KgSpec::Table(self.kg.clone()), self.alpha_sq)
    }

    pub fn dims(&self) -> [usize; DIM] {
        self.dims
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn kg(&self) -> &[f64] {
        &self.kg
    }

    pub fn alpha_sq(&self) -> f64 {
        self.alpha_sq
    }

    pub fn num_sites(&self) -> usize {
        self.n_sites
    }

    /// Weight of every cell in integrals: `h⁴`.
    pub fn measure(&self) -> f64 {
        self.h.powi(4)
    }

    pub fn volume(&self) -> f64 {
        self.measure() * self.n_sites as f64
    }

    pub fn site_index(&self, x: [usize; DIM]) -> usize {
        x[0] + self.dims[0] * (x[1] + self.dims[1] * (x[2] + self.dims[2] * x[3]))
    }

    pub fn coords(&self, mut idx: usize) -> [usize; DIM] {
        let mut x = [0; DIM];
        for (k, xk) in x.iter_mut().enumerate() {
            *xk = idx % self.dims[k];
            idx /= self.dims[k];
        }
        x
    }

    /// Physical position `h * x` of a site.
    pub fn position(&self, site: usize) -> [f64; DIM] {
        let x = self.coords(site);
        [0, 1, 2, 3].map(|k| x[k] as f64 * self.h)
    }

    pub fn forward(&self, site: usize, axis: usize) -> Option<usize> {
        let c = (site / self.strides[axis]) % self.dims[axis];
        (c + 1 < self.dims[axis]).then(|| site + self.strides[axis])
    }

    pub fn backward(&self, site: usize, axis: usize) -> Option<usize> {
        let c = (site / self.strides[axis]) % self.dims[axis];
        (c > 0).then(|| site - self.strides[axis])
    }

    fn coord(&self, site: usize, axis: usize) -> usize {
        (site / self.strides[axis]) % self.dims[axis]
    }

    /// True when the site is strictly inside along `axis`.
    pub fn interior_along(&self, site: usize, axis: usize) -> bool {
        let c = self.coord(site, axis);
        c >= 1 && c + 2 <= self.dims[axis]
    }

    pub fn is_interior_site(&self, site: usize) -> bool {
        (0..DIM).all(|k| self.interior_along(site, k))
    }

    pub fn site_kind(&self, site: usize) -> SiteKind {
        let mut normals = Vec::new();
        for k in 0..DIM {
            let c = self.coord(site, k);
            if c == 0 {
                normals.push((k, -1));
            } else if c + 1 == self.dims[k] {
                normals.push((k, 1));
            }
        }
        if normals.is_empty() {
            SiteKind::Interior
        } else {
            SiteKind::Boundary(normals)
        }
    }

    /// Whether cell `(site, axis_sets(degree)[set])` lies in the box.
    pub fn cell_defined(&self, degree: usize, site: usize, set: usize) -> bool {
        axis_sets(degree)[set]
            .iter()
            .all(|&k| self.coord(site, k) + 2 <= self.dims[k])
    }

    /// Whether a defined cell is interior: every direction transverse to it
    /// has a complete backward-difference stencil.
    pub fn is_interior_cell(&self, degree: usize, site: usize, set: usize) -> bool {
        let axes = axis_sets(degree)[set];
        (0..DIM)
            .filter(|k| !axes.contains(k))
            .all(|k| self.interior_along(site, k))
    }

    /// A link `(site, axis)` whose endpoints share a boundary face: the
    /// tangential boundary trace of a connection.
    pub fn is_trace_link(&self, site: usize, axis: usize) -> bool {
        self.cell_defined(1, site, axis) && !self.is_interior_cell(1, site, axis)
    }

    pub fn count_cells(&self, degree: usize) -> usize {
        let sets = axis_sets(degree).len();
        (0..self.n_sites)
            .map(|s| {
                (0..sets)
                    .filter(|&c| self.cell_defined(degree, s, c))
                    .count()
            })
            .sum()
    }
}

/// A discrete differential form with coefficients of type `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Form<T> {
    degree: usize,
    values: Vec<T>,
}

impl<T: FieldValue> Form<T> {
    pub fn zeros(domain: &Domain, degree: usize) -> Self {
        assert!(degree <= DIM, "form degree {degree} out of range");
        Self {
            degree,
            values: vec![T::default(); domain.num_sites() * axis_sets(degree).len()],
        }
    }

    /// Build a form by evaluating `f(site, set)` on every defined cell.
    pub fn from_fn(domain: &Domain, degree: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut form = Self::zeros(domain, degree);
        let sets = axis_sets(degree).len();
        for s in 0..domain.num_sites() {
            for c in 0..sets {
                if domain.cell_defined(degree, s, c) {
                    form.values[s * sets + c] = f(s, c);
                }
            }
        }
        form
    }

    pub fn from_values(domain: &Domain, degree: usize, values: Vec<T>) -> Result<Self> {
        let expected = domain.num_sites() * axis_sets(degree).len();
        if degree > DIM || values.len() != expected {
            return Err(Error::Mismatch(format!(
                "degree {degree} form needs {expected} slots, got {}",
                values.len()
            )));
        }
        Ok(Self { degree, values })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn num_sets(&self) -> usize {
        axis_sets(self.degree).len()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn get(&self, site: usize, set: usize) -> T {
        self.values[site * self.num_sets() + set]
    }

    pub fn set(&mut self, site: usize, set: usize, v: T) {
        let n = self.num_sets();
        self.values[site * n + set] = v;
    }

    pub fn at_mut(&mut self, site: usize, set: usize) -> &mut T {
        let n = self.num_sets();
        &mut self.values[site * n + set]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map<U: FieldValue>(&self, f: impl Fn(T) -> U) -> Form<U> {
        Form {
            degree: self.degree,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `self + t * other`.
    pub fn axpy(&self, t: f64, other: &Form<T>) -> Form<T> {
        assert_eq!(self.degree, other.degree);
        Form {
            degree: self.degree,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| a + b * t)
                .collect(),
        }
    }

    pub fn scaled(&self, t: f64) -> Form<T> {
        self.map(|v| v * t)
    }

    /// Zero every slot for which `keep(site, set)` is false.
    pub fn masked(&self, mut keep: impl FnMut(usize, usize) -> bool) -> Form<T> {
        let n = self.num_sets();
        let mut out = self.clone();
        for (i, v) in out.values.iter_mut().enumerate() {
            if !keep(i / n, i % n) {
                *v = T::default();
            }
        }
        out
    }

    /// Pointwise norm `|ω|(x)` summed over the axis sets at each site.
    pub fn pointwise_norms(&self) -> Vec<f64> {
        self.values
            .chunks(self.num_sets())
            .map(|c| c.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt())
            .collect()
    }

    fn check_domain(&self, domain: &Domain) -> Result<()> {
        if self.values.len() != domain.num_sites() * self.num_sets() {
            return Err(Error::Mismatch("form does not live on this domain".into()));
        }
        Ok(())
    }
}

fn sign(pos: usize) -> f64 {
    if pos.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Exterior derivative: degree `r` → `r + 1`.
pub fn d<T: FieldValue>(domain: &Domain, form: &Form<T>) -> Result<Form<T>> {
    form.check_domain(domain)?;
    let r = form.degree;
    if r >= DIM {
        return Err(Error::InvalidDegree(format!("d of a degree-{r} form")));
    }
    let inv_h = 1.0 / domain.h();
    let faces: Vec<Vec<usize>> = axis_sets(r + 1)
        .iter()
        .map(|axes| {
            (0..axes.len())
                .map(|j| {
                    let face: Vec<usize> = axes
                        .iter()
                        .enumerate()
                        .filter(|&(p, _)| p != j)
                        .map(|(_, &a)| a)
                        .collect();
                    axis_set_index(&face)
                })
                .collect()
        })
        .collect();
    Ok(Form::from_fn(domain, r + 1, |s, c| {
        let axes = axis_sets(r + 1)[c];
        let mut acc = T::default();
        for (j, &axis) in axes.iter().enumerate() {
            let f = faces[c][j];
            let fwd = domain
                .forward(s, axis)
                .expect("defined cell has forward neighbour");
            let diff = form.get(fwd, f) - form.get(s, f);
            if j % 2 == 0 {
                acc += diff;
            } else {
                acc -= diff;
            }
        }
        acc * inv_h
    }))
}

fn adjoint_impl<T: FieldValue>(
    domain: &Domain,
    form: &Form<T>,
    complete_only: bool,
) -> Result<Form<T>> {
    form.check_domain(domain)?;
    let r = form.degree;
    if r == 0 {
        return Err(Error::InvalidDegree("codifferential of a 0-form".into()));
    }
    let inv_h = 1.0 / domain.h();
    Ok(Form::from_fn(domain, r - 1, |s, c| {
        let axes = axis_sets(r - 1)[c];
        let mut acc = T::default();
        for i in (0..DIM).filter(|i| !axes.contains(i)) {
            if complete_only && !domain.interior_along(s, i) {
                continue;
            }
            let mut up: Vec<usize> = axes.to_vec();
            let pos = up.iter().position(|&a| a > i).unwrap_or(up.len());
            up.insert(pos, i);
            let set = axis_set_index(&up);
            let mut term = T::default();
            if let Some(b) = domain.backward(s, i) {
                term += form.get(b, set);
            }
            if domain.cell_defined(r, s, set) {
                term -= form.get(s, set);
            }
            acc += term * sign(pos);
        }
        acc * inv_h
    }))
}

/// Exact transpose of [`d`] under [`inner_product`], boundary rows included.
pub fn d_transpose<T: FieldValue>(domain: &Domain, form: &Form<T>) -> Result<Form<T>> {
    adjoint_impl(domain, form, false)
}

/// Codifferential `d*`: degree `r` → `r − 1` by backward differences, keeping
/// only the directions with a complete stencil.
pub fn codifferential<T: FieldValue>(domain: &Domain, form: &Form<T>) -> Result<Form<T>> {
    adjoint_impl(domain, form, true)
}

/// `h⁴ Σ Re<a, b>` over all cells.
pub fn inner_product<T: FieldValue>(domain: &Domain, a: &Form<T>, b: &Form<T>) -> Result<f64> {
    a.check_domain(domain)?;
    b.check_domain(domain)?;
    if a.degree != b.degree {
        return Err(Error::Mismatch(format!(
            "degrees {} and {}",
            a.degree, b.degree
        )));
    }
    Ok(domain.measure()
        * a.values
            .iter()
            .zip(&b.values)
            .map(|(&x, &y)| x.dot(y))
            .sum::<f64>())
}

/// `L^p` norm of site-wise magnitudes; `p = f64::INFINITY` gives the sup norm.
pub fn lp_norm_of_magnitudes(domain: &Domain, mags: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return mags.iter().fold(0.0, |m, &v| m.max(v));
    }
    if p == 2.0 {
        return (domain.measure() * mags.iter().map(|v| v * v).sum::<f64>()).sqrt();
    }
    (domain.measure() * mags.iter().map(|v| v.powf(p)).sum::<f64>()).powf(1.0 / p)
}

fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "L^p exponent must be >= 1, got {p}"
        )))
    }
}

pub fn lp_norm<T: FieldValue>(domain: &Domain, form: &Form<T>, p: f64) -> Result<f64> {
    form.check_domain(domain)?;
    check_p(p)?;
    Ok(lp_norm_of_magnitudes(domain, &form.pointwise_norms(), p))
}

/// Site-wise magnitude of the flat derivative `∇⁰ω` (plain forward
/// differences of every component along every axis with a neighbour).
fn flat_gradient_magnitudes<T: FieldValue>(domain: &Domain, form: &Form<T>) -> Vec<f64> {
    let n = form.num_sets();
    let inv_h = 1.0 / domain.h();
    (0..domain.num_sites())
        .map(|s| {
            let mut acc = 0.0;
            for c in 0..n {
                if !domain.cell_defined(form.degree, s, c) {
                    continue;
                }
                for j in 0..DIM {
                    if let Some(f) = domain.forward(s, j) {
                        if domain.cell_defined(form.degree, f, c) {
                            acc += ((form.get(f, c) - form.get(s, c)) * inv_h).norm_sqr();
                        }
                    }
                }
            }
            acc.sqrt()
        })
        .collect()
}

fn flat_hessian_magnitudes<T: FieldValue>(domain: &Domain, form: &Form<T>) -> Vec<f64> {
    let n = form.num_sets();
    let inv_h2 = 1.0 / (domain.h() * domain.h());
    (0..domain.num_sites())
        .map(|s| {
            let mut acc = 0.0;
            for c in 0..n {
                for j in 0..DIM {
                    for l in 0..DIM {
                        let Some(sj) = domain.forward(s, j) else {
                            continue;
                        };
                        let Some(sl) = domain.forward(s, l) else {
                            continue;
                        };
                        let Some(sjl) = domain.forward(sj, l) else {
                            continue;
                        };
                        if [s, sj, sl, sjl]
                            .iter()
                            .all(|&t| domain.cell_defined(form.degree, t, c))
                        {
                            let v = form.get(sjl, c) - form.get(sj, c) - form.get(sl, c)
                                + form.get(s, c);
                            acc += (v * inv_h2).norm_sqr();
                        }
                    }
                }
            }
            acc.sqrt()
        })
        .collect()
}

/// `‖ω‖_{L^{k,p}} = Σ_{i ≤ k} ‖(∇⁰)^i ω‖_{L^p}` with the flat base connection.
pub fn sobolev_norm<T: FieldValue>(
    domain: &Domain,
    form: &Form<T>,
    k: usize,
    p: f64,
) -> Result<f64> {
    form.check_domain(domain)?;
    check_p(p)?;
    if k > 2 {
        return Err(Error::Parameter(format!(
            "Sobolev order {k} not supported (max 2)"
        )));
    }
    let mut total = lp_norm(domain, form, p)?;
    if k >= 1 {
        total += lp_norm_of_magnitudes(domain, &flat_gradient_magnitudes(domain, form), p);
    }
    if k >= 2 {
        total += lp_norm_of_magnitudes(domain, &flat_hessian_magnitudes(domain, form), p);
    }
    Ok(total)
}

/// `<dω, η> − <ω, d*η>`: the discrete boundary integral of `ω ∧ *η`.
pub fn boundary_defect<T: FieldValue>(
    domain: &Domain,
    omega: &Form<T>,
    eta: &Form<T>,
) -> Result<f64> {
    if omega.degree + 1 != eta.degree {
        return Err(Error::Mismatch(format!(
            "boundary defect needs degrees r-1 and r, got {} and {}",
            omega.degree, eta.degree
        )));
    }
    let lhs = inner_product(domain, &d(domain, omega)?, eta)?;
    let rhs = inner_product(domain, omega, &codifferential(domain, eta)?)?;
    Ok(lhs - rhs)
}
