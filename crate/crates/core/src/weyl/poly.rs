//! Exact coefficient arithmetic for the operator algebra: sparse polynomials
//! in a formal ħ over the Gaussian rationals. Keeping ħ symbolic makes
//! operator identities provable as exact coefficient equalities rather than
//! floating-point near-misses.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num::{BigInt, BigRational, ToPrimitive, Zero};
use num_complex::Complex;

/// Gaussian rational: complex number with `BigRational` parts.
pub type Scalar = Complex<BigRational>;

pub fn big_ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// num/den as a real scalar.
pub fn scalar_rational(num: i64, den: i64) -> Scalar {
    Complex::new(big_ratio(num, den), BigRational::zero())
}

/// (num/den)·i as a purely imaginary scalar.
pub fn scalar_imaginary(num: i64, den: i64) -> Scalar {
    Complex::new(BigRational::zero(), big_ratio(num, den))
}

/// Polynomial in formal ħ, sparse by power. Zero coefficients are never
/// stored, so structural equality is semantic equality.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct HbarPoly {
    terms: BTreeMap<u32, Scalar>,
}

impl HbarPoly {
    pub fn zero() -> Self {
        HbarPoly::default()
    }

    pub fn one() -> Self {
        HbarPoly::term(0, scalar_rational(1, 1))
    }

    /// Single term c·ħ^power.
    pub fn term(power: u32, coef: Scalar) -> Self {
        let mut p = HbarPoly::default();
        p.insert_add(power, coef);
        p
    }

    /// Real rational constant.
    pub fn rational(num: i64, den: i64) -> Self {
        HbarPoly::term(0, scalar_rational(num, den))
    }

    /// Purely imaginary rational constant.
    pub fn imaginary(num: i64, den: i64) -> Self {
        HbarPoly::term(0, scalar_imaginary(num, den))
    }

    /// i·k·ħ, the unit appearing in canonical commutators.
    pub fn ihbar(k: i64) -> Self {
        HbarPoly::term(1, scalar_imaginary(k, 1))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn insert_add(&mut self, power: u32, coef: Scalar) {
        if coef.is_zero() {
            return;
        }
        let entry = self.terms.entry(power).or_insert_with(Scalar::zero);
        *entry = entry.clone() + coef;
        if entry.is_zero() {
            self.terms.remove(&power);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&power, coef) in &other.terms {
            out.insert_add(power, coef.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        let mut out = HbarPoly::default();
        for (&power, coef) in &self.terms {
            out.insert_add(power, -coef.clone());
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = HbarPoly::default();
        for (&pa, ca) in &self.terms {
            for (&pb, cb) in &other.terms {
                out.insert_add(pa + pb, ca.clone() * cb.clone());
            }
        }
        out
    }

    pub fn scale(&self, s: &Scalar) -> Self {
        let mut out = HbarPoly::default();
        for (&power, coef) in &self.terms {
            out.insert_add(power, coef.clone() * s.clone());
        }
        out
    }

    /// Multiply by i.
    pub fn times_i(&self) -> Self {
        self.scale(&scalar_imaginary(1, 1))
    }

    /// Multiply by ħ^k.
    pub fn shift_hbar(&self, k: u32) -> Self {
        let mut out = HbarPoly::default();
        for (&power, coef) in &self.terms {
            out.insert_add(power + k, coef.clone());
        }
        out
    }

    /// Complex conjugate of each coefficient; ħ itself is real.
    pub fn conj(&self) -> Self {
        let mut out = HbarPoly::default();
        for (&power, coef) in &self.terms {
            out.insert_add(power, coef.conj());
        }
        out
    }

    /// Numeric value at a concrete ħ.
    pub fn eval(&self, hbar: f64) -> Complex<f64> {
        let mut acc = Complex::new(0.0, 0.0);
        for (&power, coef) in &self.terms {
            let c = Complex::new(
                coef.re.to_f64().expect("rational out of f64 range"),
                coef.im.to_f64().expect("rational out of f64 range"),
            );
            acc += c * hbar.powi(power as i32);
        }
        acc
    }

    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().next_back().copied()
    }
}

impl Add for &HbarPoly {
    type Output = HbarPoly;
    fn add(self, rhs: &HbarPoly) -> HbarPoly {
        HbarPoly::add(self, rhs)
    }
}

impl Sub for &HbarPoly {
    type Output = HbarPoly;
    fn sub(self, rhs: &HbarPoly) -> HbarPoly {
        HbarPoly::sub(self, rhs)
    }
}

impl Mul for &HbarPoly {
    type Output = HbarPoly;
    fn mul(self, rhs: &HbarPoly) -> HbarPoly {
        HbarPoly::mul(self, rhs)
    }
}

impl Neg for &HbarPoly {
    type Output = HbarPoly;
    fn neg(self) -> HbarPoly {
        HbarPoly::neg(self)
    }
}

fn fmt_scalar(c: &Scalar, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let re0 = c.re.is_zero();
    let im0 = c.im.is_zero();
    match (re0, im0) {
        (true, true) => write!(f, "0"),
        (false, true) => write!(f, "({})", c.re),
        (true, false) => write!(f, "({})i", c.im),
        (false, false) => write!(f, "({} + {}i)", c.re, c.im),
    }
}

impl fmt::Display for HbarPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, (&power, coef)) in self.terms.iter().enumerate() {
            if idx > 0 {
                write!(f, " + ")?;
            }
            fmt_scalar(coef, f)?;
            if power > 0 {
                write!(f, " h^{power}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for HbarPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_and_normalization() {
        let a = HbarPoly::rational(3, 2);
        let b = HbarPoly::ihbar(2);
        let sum = &a + &b;
        assert_eq!(sum.to_string(), "(3/2) + (2)i h^1");
        assert!((&sum - &sum).is_zero());

        // ihbar(2)·ihbar(3) = -6 ħ².
        let prod = &b * &HbarPoly::ihbar(3);
        assert_eq!(prod, HbarPoly::term(2, scalar_rational(-6, 1)));
    }

    #[test]
    fn conjugation_flips_imaginary_parts_only() {
        let p = &HbarPoly::rational(1, 3) + &HbarPoly::ihbar(5);
        let q = p.conj();
        assert_eq!(q, &HbarPoly::rational(1, 3) - &HbarPoly::ihbar(5));
        assert_eq!(q.conj(), p);
    }

    #[test]
    fn eval_matches_hand_value() {
        // (1/2)ħ² − 2i at ħ = 3 → 4.5 − 2i.
        let p = &HbarPoly::term(2, scalar_rational(1, 2)) + &HbarPoly::imaginary(-2, 1);
        let v = p.eval(3.0);
        assert_eq!(v, Complex::new(4.5, -2.0));
    }

    #[test]
    fn shift_hbar_raises_every_power() {
        let p = &HbarPoly::rational(1, 1) + &HbarPoly::ihbar(1);
        let q = p.shift_hbar(2);
        assert_eq!(q.degree(), Some(3));
        assert_eq!(q.eval(2.0), Complex::new(4.0, 8.0));
    }
}
