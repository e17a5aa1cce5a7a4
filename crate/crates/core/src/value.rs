//! Coefficient types carried by lattice forms: real numbers (u(1) coefficients,
//! stored as the real multiple of `i`) and C² spinor values.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;

/// Coefficient type of a [`Form`](crate::lattice::Form).
///
/// `dot` is the real part of the hermitian product, which is the pairing used
/// by every integral in the crate.
pub trait FieldValue:
    Copy
    + Default
    + PartialEq
    + std::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Neg<Output = Self>
    + Mul<f64, Output = Self>
    + AddAssign
    + SubAssign
{
    /// Number of reals in the serialised representation.
    const REALS: usize;

    fn dot(self, other: Self) -> f64;

    fn norm_sqr(self) -> f64 {
        self.dot(self)
    }

    fn is_finite(self) -> bool;

    fn write_reals(self, out: &mut Vec<f64>);

    fn from_reals(r: &[f64]) -> Self;
}

impl FieldValue for f64 {
    const REALS: usize = 1;

    fn dot(self, other: Self) -> f64 {
        self * other
    }

    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }

    fn write_reals(self, out: &mut Vec<f64>) {
        out.push(self);
    }

    fn from_reals(r: &[f64]) -> Self {
        r[0]
    }
}

/// Value of a section of the trivialised rank-2 spinor bundle at one site.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Spinor(pub [Complex64; 2]);

impl Spinor {
    pub const ZERO: Spinor = Spinor([Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)]);

    pub fn new(a: Complex64, b: Complex64) -> Self {
        Spinor([a, b])
    }

    pub fn from_parts(re1: f64, im1: f64, re2: f64, im2: f64) -> Self {
        Spinor([Complex64::new(re1, im1), Complex64::new(re2, im2)])
    }

    /// Multiply both components by a complex scalar.
    pub fn scale(self, z: Complex64) -> Self {
        Spinor([self.0[0] * z, self.0[1] * z])
    }

    /// Multiply by `exp(i * angle)`.
    pub fn rotate(self, angle: f64) -> Self {
        self.scale(Complex64::cis(angle))
    }

    /// Multiply by `i`.
    pub fn mul_i(self) -> Self {
        Spinor([
            Complex64::new(-self.0[0].im, self.0[0].re),
            Complex64::new(-self.0[1].im, self.0[1].re),
        ])
    }

    pub fn abs(self) -> f64 {
        self.norm_sqr().sqrt()
    }
}

impl Add for Spinor {
    type Output = Spinor;
    fn add(self, o: Spinor) -> Spinor {
        Spinor([self.0[0] + o.0[0], self.0[1] + o.0[1]])
    }
}

impl Sub for Spinor {
    type Output = Spinor;
    fn sub(self, o: Spinor) -> Spinor {
        Spinor([self.0[0] - o.0[0], self.0[1] - o.0[1]])
    }
}

impl Neg for Spinor {
    type Output = Spinor;
    fn neg(self) -> Spinor {
        Spinor([-self.0[0], -self.0[1]])
    }
}

impl Mul<f64> for Spinor {
    type Output = Spinor;
    fn mul(self, s: f64) -> Spinor {
        Spinor([self.0[0] * s, self.0[1] * s])
    }
}

impl AddAssign for Spinor {
    fn add_assign(&mut self, o: Spinor) {
        self.0[0] += o.0[0];
        self.0[1] += o.0[1];
    }
}

impl SubAssign for Spinor {
    fn sub_assign(&mut self, o: Spinor) {
        self.0[0] -= o.0[0];
        self.0[1] -= o.0[1];
    }
}

impl FieldValue for Spinor {
    const REALS: usize = 4;

    fn dot(self, o: Self) -> f64 {
        // Re <a, b> = Re(conj(a) b)
        self.0[0].re * o.0[0].re
            + self.0[0].im * o.0[0].im
            + self.0[1].re * o.0[1].re
            + self.0[1].im * o.0[1].im
    }

    fn is_finite(self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    fn write_reals(self, out: &mut Vec<f64>) {
        out.extend_from_slice(&[self.0[0].re, self.0[0].im, self.0[1].re, self.0[1].im]);
    }

    fn from_reals(r: &[f64]) -> Self {
        Spinor::from_parts(r[0], r[1], r[2], r[3])
    }
}
