//! The algebra generated by x̂ and p̂ with [x̂, p̂] = iħ, represented exactly.
//!
//! Elements are finite sums c_{a,b}(ħ)·x̂^a p̂^b in canonical order (every x̂
//! to the left of every p̂), with [`HbarPoly`] coefficients. Products are
//! brought back to canonical order by the reordering rule
//! p̂^b x̂ = x̂ p̂^b − iħ·b·p̂^{b−1}, so identities among symmetrized monomials,
//! the scaling triple, and the ladder maps hold as exact coefficient
//! equalities.

pub mod poly;

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::error::Error;
use crate::numeric::binomial;
use crate::Result;
pub use poly::{scalar_imaginary, scalar_rational, HbarPoly, Scalar};

/// Element of the x̂/p̂ algebra in canonical order: key (a, b) carries the
/// coefficient of x̂^a p̂^b. Zero coefficients are never stored.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct WeylElement {
    terms: BTreeMap<(u32, u32), HbarPoly>,
}

thread_local! {
    static REORDER_CACHE: RefCell<HashMap<(u32, u32), WeylElement>> =
        RefCell::new(HashMap::new());
}

impl WeylElement {
    pub fn zero() -> Self {
        WeylElement::default()
    }

    pub fn identity() -> Self {
        WeylElement::monomial(0, 0, HbarPoly::one())
    }

    pub fn x() -> Self {
        WeylElement::monomial(1, 0, HbarPoly::one())
    }

    pub fn p() -> Self {
        WeylElement::monomial(0, 1, HbarPoly::one())
    }

    /// coef·x̂^a p̂^b.
    pub fn monomial(x_pow: u32, p_pow: u32, coef: HbarPoly) -> Self {
        let mut e = WeylElement::default();
        e.insert_add((x_pow, p_pow), coef);
        e
    }

    /// Constant multiple of the identity.
    pub fn constant(coef: HbarPoly) -> Self {
        WeylElement::monomial(0, 0, coef)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of x̂^a p̂^b (zero when absent).
    pub fn coefficient(&self, x_pow: u32, p_pow: u32) -> HbarPoly {
        self.terms
            .get(&(x_pow, p_pow))
            .cloned()
            .unwrap_or_else(HbarPoly::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(u32, u32), &HbarPoly)> {
        self.terms.iter()
    }

    /// Largest a + b over stored terms.
    pub fn max_degree(&self) -> Option<u32> {
        self.terms.keys().map(|&(a, b)| a + b).max()
    }

    fn insert_add(&mut self, key: (u32, u32), coef: HbarPoly) {
        if coef.is_zero() {
            return;
        }
        let entry = self.terms.entry(key).or_insert_with(HbarPoly::zero);
        *entry = entry.add(&coef);
        if entry.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&key, coef) in &other.terms {
            out.insert_add(key, coef.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        let mut out = WeylElement::default();
        for (&key, coef) in &self.terms {
            out.insert_add(key, coef.neg());
        }
        out
    }

    pub fn scale(&self, c: &HbarPoly) -> Self {
        let mut out = WeylElement::default();
        for (&key, coef) in &self.terms {
            out.insert_add(key, coef.mul(c));
        }
        out
    }

    /// Left-multiplication by x̂^k: canonical order is preserved directly.
    fn shift_x(&self, k: u32) -> Self {
        let mut out = WeylElement::default();
        for (&(a, b), coef) in &self.terms {
            out.insert_add((a + k, b), coef.clone());
        }
        out
    }

    /// Right-multiplication by p̂^k: canonical order is preserved directly.
    fn shift_p(&self, k: u32) -> Self {
        let mut out = WeylElement::default();
        for (&(a, b), coef) in &self.terms {
            out.insert_add((a, b + k), coef.clone());
        }
        out
    }

    /// p̂^b x̂^a re-expressed in canonical order.
    ///
    /// Recursion p̂^b x̂^a = x̂·(p̂^b x̂^{a−1}) − iħ·b·(p̂^{b−1} x̂^{a−1}),
    /// memoized per thread: the same subproblems recur throughout products
    /// and ladder checks.
    pub fn reorder(p_pow: u32, x_pow: u32) -> Self {
        if p_pow == 0 || x_pow == 0 {
            return WeylElement::monomial(x_pow, p_pow, HbarPoly::one());
        }
        if let Some(hit) =
            REORDER_CACHE.with(|c| c.borrow().get(&(p_pow, x_pow)).cloned())
        {
            return hit;
        }
        let head = Self::reorder(p_pow, x_pow - 1).shift_x(1);
        let tail = Self::reorder(p_pow - 1, x_pow - 1)
            .scale(&HbarPoly::ihbar(-(p_pow as i64)));
        let result = head.add(&tail);
        REORDER_CACHE.with(|c| {
            c.borrow_mut().insert((p_pow, x_pow), result.clone());
        });
        result
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = WeylElement::default();
        for (&(a1, b1), c1) in &self.terms {
            for (&(a2, b2), c2) in &other.terms {
                // x̂^a1 p̂^b1 · x̂^a2 p̂^b2 = x̂^a1 · (p̂^b1 x̂^a2) · p̂^b2.
                let middle = Self::reorder(b1, a2).shift_x(a1).shift_p(b2);
                let coef = c1.mul(c2);
                for (&key, c) in &middle.terms {
                    out.insert_add(key, c.mul(&coef));
                }
            }
        }
        out
    }

    pub fn commutator(a: &Self, b: &Self) -> Self {
        a.mul(b).sub(&b.mul(a))
    }

    /// Hermitian adjoint: reverses each product and conjugates coefficients
    /// (ħ is real).
    pub fn adjoint(&self) -> Self {
        let mut out = WeylElement::default();
        for (&(a, b), coef) in &self.terms {
            let reversed = Self::reorder(b, a).scale(&coef.conj());
            out = out.add(&reversed);
        }
        out
    }

    pub fn is_hermitian(&self) -> bool {
        self.adjoint() == *self
    }

    /// Symmetrized monomial of degree n with ℓ momentum factors:
    /// 2^{−ℓ} Σ_k C(ℓ,k) p̂^k x̂^{n−ℓ} p̂^{ℓ−k}.
    pub fn weyl_monomial(n: u32, l: u32) -> Result<Self> {
        if l > n {
            return Err(Error::invalid(format!(
                "weyl_monomial requires l <= n, got n = {n}, l = {l}"
            )));
        }
        let mut out = WeylElement::zero();
        for k in 0..=l {
            let weight = Scalar::from(poly::big_ratio(
                binomial(l as usize, k as usize) as i64,
                1i64 << l,
            ));
            let term = Self::reorder(k, n - l).shift_p(l - k);
            out = out.add(&term.scale(&HbarPoly::term(0, weight)));
        }
        Ok(out)
    }

    /// Coefficients c_ℓ with `self` = Σ_ℓ c_ℓ·O_{n,ℓ} over the degree-n
    /// symmetrized monomials, or an error if `self` lies outside their span.
    ///
    /// Each O_{n,ℓ} has x̂^{n−ℓ}p̂^ℓ as its unique top-degree term, so the
    /// coefficients are read off directly and the remainder must cancel
    /// exactly.
    pub fn expand_weyl(&self, n: u32) -> Result<Vec<HbarPoly>> {
        let mut coeffs = Vec::with_capacity(n as usize + 1);
        let mut remainder = self.clone();
        for l in 0..=n {
            let c = remainder.coefficient(n - l, l);
            if !c.is_zero() {
                remainder = remainder.sub(&Self::weyl_monomial(n, l)?.scale(&c));
            }
            coeffs.push(c);
        }
        if !remainder.is_zero() {
            return Err(Error::invalid(format!(
                "element is not a combination of degree-{n} symmetrized monomials; remainder {remainder}"
            )));
        }
        Ok(coeffs)
    }
}

impl fmt::Display for WeylElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, (&(a, b), coef)) in self.terms.iter().enumerate() {
            if idx > 0 {
                write!(f, " + ")?;
            }
            write!(f, "[{coef}]")?;
            if a > 0 {
                write!(f, " x^{a}")?;
            }
            if b > 0 {
                write!(f, " p^{b}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for WeylElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// The scaling triple x̂², p̂², D̂ = (x̂p̂ + p̂x̂)/2, closed under commutators.
#[derive(Clone)]
pub struct SL2Triple {
    pub x2: WeylElement,
    pub p2: WeylElement,
    pub d: WeylElement,
}

impl SL2Triple {
    pub fn new() -> Self {
        // D̂ in canonical order is x̂p̂ − iħ/2.
        let d = WeylElement::monomial(1, 1, HbarPoly::one())
            .add(&WeylElement::constant(HbarPoly::term(1, scalar_imaginary(-1, 2))));
        SL2Triple {
            x2: WeylElement::monomial(2, 0, HbarPoly::one()),
            p2: WeylElement::monomial(0, 2, HbarPoly::one()),
            d,
        }
    }

    /// Exact check of the triple's commutation relations:
    /// [D̂, x̂²] = −2iħ x̂², [D̂, p̂²] = +2iħ p̂², [x̂², p̂²] = +4iħ D̂.
    pub fn verify_relations(&self) -> Result<()> {
        let checks: [(&str, WeylElement, WeylElement); 3] = [
            (
                "[D, x^2] = -2ih x^2",
                WeylElement::commutator(&self.d, &self.x2),
                self.x2.scale(&HbarPoly::ihbar(-2)),
            ),
            (
                "[D, p^2] = +2ih p^2",
                WeylElement::commutator(&self.d, &self.p2),
                self.p2.scale(&HbarPoly::ihbar(2)),
            ),
            (
                "[x^2, p^2] = +4ih D",
                WeylElement::commutator(&self.x2, &self.p2),
                self.d.scale(&HbarPoly::ihbar(4)),
            ),
        ];
        for (label, got, want) in checks {
            if got != want {
                return Err(Error::invalid(format!(
                    "scaling-triple relation failed: {label}; got {got}"
                )));
            }
        }
        Ok(())
    }

    /// ½(x̂²p̂² + p̂²x̂²) − D̂², a multiple of the identity.
    pub fn casimir(&self) -> WeylElement {
        let sym = self
            .x2
            .mul(&self.p2)
            .add(&self.p2.mul(&self.x2))
            .scale(&HbarPoly::rational(1, 2));
        sym.sub(&self.d.mul(&self.d))
    }
}

impl Default for SL2Triple {
    fn default() -> Self {
        Self::new()
    }
}

/// Exact check that the triple acts on the symmetrized monomials by ladder
/// shifts, for every degree n ≤ `n_max` and 0 ≤ ℓ ≤ n:
///
///   [D̂,  O_{n,ℓ}] = iħ(2ℓ−n)·O_{n,ℓ},
///   [p̂², O_{n,ℓ}] = −2iħ(n−ℓ)·O_{n,ℓ+1},
///   [x̂², O_{n,ℓ}] = +2iħℓ·O_{n,ℓ−1}.
pub fn verify_ladder(n_max: u32) -> Result<()> {
    let triple = SL2Triple::new();
    for n in 0..=n_max {
        for l in 0..=n {
            let o = WeylElement::weyl_monomial(n, l)?;

            let got_d = WeylElement::commutator(&triple.d, &o);
            let want_d = o.scale(&HbarPoly::ihbar(2 * l as i64 - n as i64));
            if got_d != want_d {
                return Err(Error::invalid(format!(
                    "diagonal ladder relation failed at n = {n}, l = {l}"
                )));
            }

            let got_up = WeylElement::commutator(&triple.p2, &o);
            let want_up = if l == n {
                WeylElement::zero()
            } else {
                WeylElement::weyl_monomial(n, l + 1)?
                    .scale(&HbarPoly::ihbar(-2 * (n - l) as i64))
            };
            if got_up != want_up {
                return Err(Error::invalid(format!(
                    "raising ladder relation failed at n = {n}, l = {l}"
                )));
            }

            let got_down = WeylElement::commutator(&triple.x2, &o);
            let want_down = if l == 0 {
                WeylElement::zero()
            } else {
                WeylElement::weyl_monomial(n, l - 1)?.scale(&HbarPoly::ihbar(2 * l as i64))
            };
            if got_down != want_down {
                return Err(Error::invalid(format!(
                    "lowering ladder relation failed at n = {n}, l = {l}"
                )));
            }
        }
    }
    Ok(())
}
