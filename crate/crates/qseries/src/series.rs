//! Truncated series in `q` with rational exponents and exact coefficients.
//!
//! The central type is [`QExp`]: a finite window of a Laurent-Puiseux series
//! whose exponents live on a lattice `(1/denom)*Z`.  Alongside the stored
//! coefficients every series carries an [`Horizon`]: the largest exponent up
//! to which the stored data is guaranteed complete.  All arithmetic
//! propagates that horizon explicitly, so a computation can never silently
//! report a coefficient it does not actually know.
//!
//! Contents:
//! * [`QExp`] construction ([`QExp::monomial`], [`QExp::zero`], [`QExp::one`],
//!   [`QExp::from_terms`]) and queries ([`QExp::coeff`], [`QExp::leading`]);
//! * ring operations `+`, `-`, `*` plus [`QExp::invert`];
//! * [`QExp::log`] / [`QExp::exp`] for formal logarithms and exponentials;
//! * substitutions [`QExp::rescale`] (`q -> q^s`) and [`QExp::negate_q`]
//!   (`q -> -q`);
//! * exact comparison [`QExp::equal_to`] returning a [`Comparison`];
//! * JSON (de)serialization with rationals rendered as `p/q` strings.

use std::cmp::Ordering;
use std::fmt;

use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::QError;
use crate::rat::{fmt_rat, is_integer, parse_rat, rat_floor, rat_int, Rat};

// ---------------------------------------------------------------------------
// Horizon
// ---------------------------------------------------------------------------

/// Exponent up to which a series is exact.
///
/// `Finite(t)` means every term with exponent `<= t` is stored exactly and
/// nothing is claimed beyond; `Infinite` marks a series known in full (for
/// example, a monomial or a finite product of monomial binomials).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Horizon {
    Finite(Rat),
    Infinite,
}

impl Horizon {
    pub fn finite(t: impl Into<Rat>) -> Self {
        Horizon::Finite(t.into())
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Horizon::Infinite)
    }

    /// True when exponent `e` is within (i.e. not beyond) the horizon.
    pub fn covers(&self, e: &Rat) -> bool {
        match self {
            Horizon::Infinite => true,
            Horizon::Finite(t) => e <= t,
        }
    }

    pub fn min(a: &Horizon, b: &Horizon) -> Horizon {
        match (a, b) {
            (Horizon::Infinite, _) => b.clone(),
            (_, Horizon::Infinite) => a.clone(),
            (Horizon::Finite(x), Horizon::Finite(y)) => {
                Horizon::Finite(if x <= y { x.clone() } else { y.clone() })
            }
        }
    }

    /// Horizon shifted by a rational amount; `Infinite` absorbs.
    pub fn shift(&self, d: &Rat) -> Horizon {
        match self {
            Horizon::Infinite => Horizon::Infinite,
            Horizon::Finite(t) => Horizon::Finite(t + d),
        }
    }

    /// Horizon sum, used by the product bound; `Infinite` absorbs.
    fn add(a: &Horizon, b: &Horizon) -> Horizon {
        match (a, b) {
            (Horizon::Finite(x), Horizon::Finite(y)) => Horizon::Finite(x + y),
            _ => Horizon::Infinite,
        }
    }

    /// Horizon scaled by a positive rational.
    fn scale(&self, s: &Rat) -> Horizon {
        match self {
            Horizon::Infinite => Horizon::Infinite,
            Horizon::Finite(t) => Horizon::Finite(t * s),
        }
    }
}

impl PartialOrd for Horizon {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Horizon {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Horizon::Infinite, Horizon::Infinite) => Ordering::Equal,
            (Horizon::Infinite, _) => Ordering::Greater,
            (_, Horizon::Infinite) => Ordering::Less,
            (Horizon::Finite(a), Horizon::Finite(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Horizon::Infinite => write!(f, "inf"),
            Horizon::Finite(t) => write!(f, "{}", fmt_rat(t)),
        }
    }
}

// ---------------------------------------------------------------------------
// QExp
// ---------------------------------------------------------------------------

/// Truncated Laurent-Puiseux series over exact rationals.
///
/// Representation: `coeffs[i]` is the coefficient of `q^((lo + i)/denom)`.
/// Canonical form (restored by every operation): `denom >= 1` and minimal
/// for the nonzero exponents present, the first and last stored coefficients
/// are nonzero (or `coeffs` is empty for the zero series, with `lo = 0`,
/// `denom = 1`), and every stored exponent lies within `order`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QExp {
    denom: i64,
    lo: i64,
    coeffs: Vec<Rat>,
    order: Horizon,
}

/// Outcome of an exact comparison of two series up to a given exponent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Comparison {
    Equal,
    Differs {
        exponent: Rat,
        lhs: Rat,
        rhs: Rat,
    },
}

impl Comparison {
    pub fn is_equal(&self) -> bool {
        matches!(self, Comparison::Equal)
    }
}

impl QExp {
    // -- construction -------------------------------------------------------

    /// The zero series, exact everywhere.
    pub fn zero() -> Self {
        QExp {
            denom: 1,
            lo: 0,
            coeffs: Vec::new(),
            order: Horizon::Infinite,
        }
    }

    /// The constant series 1.
    pub fn one() -> Self {
        QExp::monomial(Rat::one(), Rat::zero())
    }

    /// `coeff * q^exp`, exact everywhere.  A zero coefficient gives the zero
    /// series.
    pub fn monomial(coeff: Rat, exp: Rat) -> Self {
        if coeff.is_zero() {
            return QExp::zero();
        }
        let denom = exp
            .denom()
            .to_i64()
            .expect("monomial exponent denominator overflows i64");
        let lo = exp
            .numer()
            .to_i64()
            .expect("monomial exponent numerator overflows i64");
        QExp {
            denom,
            lo,
            coeffs: vec![coeff],
            order: Horizon::Infinite,
        }
    }

    /// Builds a series from `(numerator, coefficient)` terms on lattice
    /// `1/denom`.  Repeated numerators accumulate.
    pub fn from_terms<I>(denom: i64, terms: I, order: Horizon) -> Self
    where
        I: IntoIterator<Item = (i64, Rat)>,
    {
        assert!(denom >= 1, "lattice denominator must be positive");
        let terms: Vec<(i64, Rat)> = terms.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        if terms.is_empty() {
            let mut z = QExp::zero();
            z.order = order;
            return z;
        }
        let lo = terms.iter().map(|(n, _)| *n).min().unwrap();
        let hi = terms.iter().map(|(n, _)| *n).max().unwrap();
        let mut coeffs = vec![Rat::zero(); (hi - lo) as usize + 1];
        for (n, c) in terms {
            coeffs[(n - lo) as usize] += c;
        }
        let mut s = QExp {
            denom,
            lo,
            coeffs,
            order,
        };
        s.normalize();
        s
    }

    pub(crate) fn from_raw(denom: i64, lo: i64, coeffs: Vec<Rat>, order: Horizon) -> Self {
        let mut s = QExp {
            denom,
            lo,
            coeffs,
            order,
        };
        s.normalize();
        s
    }

    // -- canonical form -----------------------------------------------------

    fn normalize(&mut self) {
        debug_assert!(self.denom >= 1);
        // Drop anything beyond the horizon.
        if let Horizon::Finite(t) = &self.order {
            let max_num = rat_floor(&(t * rat_int(self.denom)))
                .to_i64()
                .expect("order numerator overflows i64");
            if max_num < self.lo {
                self.coeffs.clear();
            } else {
                let keep = (max_num - self.lo + 1) as usize;
                self.coeffs.truncate(keep);
            }
        }
        // Trim zero margins.
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
        let lead = self.coeffs.iter().take_while(|c| c.is_zero()).count();
        if lead > 0 {
            self.coeffs.drain(..lead);
            self.lo += lead as i64;
        }
        if self.coeffs.is_empty() {
            self.lo = 0;
            self.denom = 1;
            return;
        }
        // Reduce the exponent lattice: gcd over nonzero positions and denom.
        let mut g = self.denom;
        for (i, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                g = g.gcd(&(self.lo + i as i64));
                if g == 1 {
                    break;
                }
            }
        }
        if g > 1 {
            let new_len = (self.coeffs.len() - 1) / g as usize + 1;
            let mut packed = Vec::with_capacity(new_len);
            for (i, c) in std::mem::take(&mut self.coeffs).into_iter().enumerate() {
                if i % g as usize == 0 {
                    packed.push(c);
                } else {
                    debug_assert!(c.is_zero());
                }
            }
            self.coeffs = packed;
            self.lo /= g;
            self.denom /= g;
        }
    }

    // -- queries ------------------------------------------------------------

    /// Lattice denominator: exponents live on `(1/denom())*Z`.
    pub fn denom(&self) -> i64 {
        self.denom
    }

    /// Numerator of the lowest stored exponent (0 for the zero series).
    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn order(&self) -> &Horizon {
        &self.order
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Count of stored nonzero terms.
    pub fn term_count(&self) -> usize {
        self.coeffs.iter().filter(|c| !c.is_zero()).count()
    }

    /// Lowest exponent and its coefficient, if any term is visible.
    pub fn leading(&self) -> Option<(Rat, &Rat)> {
        self.coeffs
            .first()
            .map(|c| (Rat::new(self.lo.into(), self.denom.into()), c))
    }

    /// Coefficient of `q^e`; `None` when `e` lies beyond the horizon.
    pub fn coeff(&self, e: &Rat) -> Option<Rat> {
        if !self.order.covers(e) {
            return None;
        }
        let scaled = e * rat_int(self.denom);
        if !is_integer(&scaled) {
            return Some(Rat::zero());
        }
        let n = scaled.to_integer().to_i64().expect("exponent overflow");
        let idx = n - self.lo;
        if idx < 0 || idx as usize >= self.coeffs.len() {
            return Some(Rat::zero());
        }
        Some(self.coeffs[idx as usize].clone())
    }

    /// All stored nonzero terms as `(exponent, coefficient)`, ascending.
    pub fn terms(&self) -> Vec<(Rat, Rat)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| {
                (
                    Rat::new((self.lo + i as i64).into(), self.denom.into()),
                    c.clone(),
                )
            })
            .collect()
    }

    /// Lowest possible exponent of any term, as a horizon (`Infinite` for a
    /// series with no visible term).  Used by the product bound.
    fn lead_h(&self) -> Horizon {
        match self.coeffs.first() {
            None => Horizon::Infinite,
            Some(_) => Horizon::Finite(Rat::new(self.lo.into(), self.denom.into())),
        }
    }

    // -- truncation ---------------------------------------------------------

    /// Copy truncated at exponent `t`; the horizon drops to at most `t`.
    pub fn truncated(&self, t: &Rat) -> QExp {
        self.truncated_h(&Horizon::Finite(t.clone()))
    }

    pub(crate) fn truncated_h(&self, h: &Horizon) -> QExp {
        let mut s = self.clone();
        s.order = Horizon::min(&s.order, h);
        s.normalize();
        s
    }

    // -- ring operations ----------------------------------------------------

    fn aligned(a: &QExp, b: &QExp) -> (i64, i64, i64) {
        let l = a.denom.lcm(&b.denom);
        (l, l / a.denom, l / b.denom)
    }

    pub fn add(&self, other: &QExp) -> QExp {
        let order = Horizon::min(&self.order, &other.order);
        let (l, fa, fb) = QExp::aligned(self, other);
        let mut terms: Vec<(i64, Rat)> =
            Vec::with_capacity(self.coeffs.len() + other.coeffs.len());
        for (i, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                terms.push(((self.lo + i as i64) * fa, c.clone()));
            }
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            if !c.is_zero() {
                terms.push(((other.lo + i as i64) * fb, c.clone()));
            }
        }
        QExp::from_terms(l, terms, order)
    }

    pub fn neg(&self) -> QExp {
        let mut s = self.clone();
        for c in &mut s.coeffs {
            *c = -std::mem::take(c);
        }
        s
    }

    pub fn sub(&self, other: &QExp) -> QExp {
        self.add(&other.neg())
    }

    /// Product with the conservative truncation bound
    /// `min(order_a + lead_b, order_b + lead_a, order_a + order_b)`.
    pub fn mul(&self, other: &QExp) -> QExp {
        let order = Horizon::min(
            &Horizon::min(
                &Horizon::add(&self.order, &other.lead_h()),
                &Horizon::add(&other.order, &self.lead_h()),
            ),
            &Horizon::add(&self.order, &other.order),
        );
        if self.is_zero() || other.is_zero() {
            let mut z = QExp::zero();
            z.order = order;
            return z;
        }
        let (l, fa, fb) = QExp::aligned(self, other);
        let lo = self.lo * fa + other.lo * fb;
        let cap: Option<i64> = match &order {
            Horizon::Infinite => None,
            Horizon::Finite(t) => Some(
                rat_floor(&(t * rat_int(l)))
                    .to_i64()
                    .expect("order numerator overflows i64"),
            ),
        };
        let hi_full = lo + (self.coeffs.len() as i64 - 1) * fa + (other.coeffs.len() as i64 - 1) * fb;
        let hi = match cap {
            None => hi_full,
            Some(c) => hi_full.min(c),
        };
        if hi < lo {
            let mut z = QExp::zero();
            z.order = order;
            return z;
        }
        let mut acc = vec![Rat::zero(); (hi - lo) as usize + 1];
        for (i, ca) in self.coeffs.iter().enumerate() {
            if ca.is_zero() {
                continue;
            }
            let base = i as i64 * fa;
            if lo + base > hi {
                continue;
            }
            for (j, cb) in other.coeffs.iter().enumerate() {
                if cb.is_zero() {
                    continue;
                }
                let n = base + j as i64 * fb;
                if lo + n > hi {
                    break;
                }
                acc[n as usize] += ca * cb;
            }
        }
        QExp::from_raw(l, lo, acc, order)
    }

    /// Multiplies by `coeff * q^exp` in place (exact, horizon shifts by `exp`).
    pub fn mul_monomial(&self, coeff: &Rat, exp: &Rat) -> QExp {
        self.mul(&QExp::monomial(coeff.clone(), exp.clone()))
    }

    // -- inversion ----------------------------------------------------------

    /// Multiplicative inverse, computed to exponent `t`.
    ///
    /// The input must have a visible nonzero leading term.  The result's
    /// horizon is `min(t, order - 2*lead)`: inverting a series only known to
    /// a finite order cannot manufacture knowledge beyond it.
    pub fn invert(&self, t: &Rat) -> Result<QExp, QError> {
        if self.is_zero() {
            return Err(QError::DivisionByZero);
        }
        let d = self.denom;
        let lead = Rat::new(self.lo.into(), d.into());
        let order = Horizon::min(
            &Horizon::Finite(t.clone()),
            &self.order.shift(&(-&lead * rat_int(2))),
        );
        let lo_r = -self.lo;
        let max_num = rat_floor(&(t * rat_int(d)))
            .to_i64()
            .expect("order numerator overflows i64");
        if max_num < lo_r {
            let mut z = QExp::zero();
            z.order = order;
            return Ok(z);
        }
        let n_slots = (max_num - lo_r) as usize + 1;
        let c0 = &self.coeffs[0];
        let c0_inv = c0.recip();
        let mut out: Vec<Rat> = Vec::with_capacity(n_slots);
        out.push(c0_inv.clone());
        for j in 1..n_slots {
            let mut s = Rat::zero();
            let kmax = j.min(self.coeffs.len() - 1);
            for k in 1..=kmax {
                if !self.coeffs[k].is_zero() {
                    s += &self.coeffs[k] * &out[j - k];
                }
            }
            out.push(-(&c0_inv * s));
        }
        Ok(QExp::from_raw(d, lo_r, out, order))
    }

    // -- calculus helpers ---------------------------------------------------

    fn derivative(&self) -> QExp {
        let order = self.order.shift(&rat_int(-1));
        let terms = self.coeffs.iter().enumerate().filter_map(|(i, c)| {
            let num = self.lo + i as i64;
            if c.is_zero() || num == 0 {
                None
            } else {
                let e = Rat::new(num.into(), self.denom.into());
                Some((num - self.denom, c * e))
            }
        });
        QExp::from_terms(self.denom, terms.collect::<Vec<_>>(), order)
    }

    fn integrate(&self) -> QExp {
        let order = self.order.shift(&rat_int(1));
        let terms = self.coeffs.iter().enumerate().filter_map(|(i, c)| {
            if c.is_zero() {
                return None;
            }
            let num = self.lo + i as i64;
            let e1 = Rat::new((num + self.denom).into(), self.denom.into());
            debug_assert!(!e1.is_zero(), "integration hit exponent -1");
            Some((num + self.denom, c / e1))
        });
        QExp::from_terms(self.denom, terms.collect::<Vec<_>>(), order)
    }

    // -- log / exp ----------------------------------------------------------

    /// Formal logarithm up to exponent `t`; requires leading term `1*q^0`.
    pub fn log(&self, t: &Rat) -> Result<QExp, QError> {
        let ok = self
            .leading()
            .map(|(e, c)| e.is_zero() && c.is_one())
            .unwrap_or(false);
        if !ok {
            return Err(QError::WrongLeadingTerm {
                found: self
                    .leading()
                    .map(|(e, c)| format!("{}*q^{}", fmt_rat(c), fmt_rat(&e)))
                    .unwrap_or_else(|| "0".into()),
            });
        }
        let target = Horizon::min(&Horizon::Finite(t.clone()), &self.order);
        if self.coeffs.len() == 1 {
            let mut z = QExp::zero();
            z.order = target;
            return Ok(z);
        }
        let inv = self.invert(t)?;
        let res = self.derivative().mul(&inv).integrate();
        debug_assert!(res.order >= target);
        Ok(res.truncated_h(&target))
    }

    /// Formal exponential up to exponent `t`; requires every term to have a
    /// strictly positive exponent.
    pub fn exp(&self, t: &Rat) -> Result<QExp, QError> {
        let target = Horizon::min(&Horizon::Finite(t.clone()), &self.order);
        let mu = match self.leading() {
            None => {
                return Ok(QExp::one().truncated_h(&target));
            }
            Some((e, c)) => {
                if e <= Rat::zero() {
                    return Err(QError::BadExpArgument {
                        found: format!("{}*q^{}", fmt_rat(c), fmt_rat(&e)),
                    });
                }
                e
            }
        };
        let mut sum = QExp::one().truncated(t);
        let mut term = QExp::one().truncated(t);
        let mut k: i64 = 1;
        let mut k_exp = mu.clone();
        while k_exp <= *t {
            term = term.mul(self).mul_monomial(&Rat::new(1.into(), k.into()), &Rat::zero());
            term = term.truncated(t);
            sum = sum.add(&term);
            k += 1;
            k_exp += &mu;
        }
        Ok(sum.truncated_h(&target))
    }

    // -- substitutions ------------------------------------------------------

    /// Substitutes `q -> q^s` for a positive rational `s`; exponents and the
    /// horizon scale by `s`.
    pub fn rescale(&self, s: &Rat) -> Result<QExp, QError> {
        if !s.is_positive() {
            return Err(QError::BadSpecialization {
                reason: format!("rescale needs s > 0, got {}", fmt_rat(s)),
            });
        }
        let p = s.numer().to_i64().expect("rescale numerator overflow");
        let r = s.denom().to_i64().expect("rescale denominator overflow");
        let order = self.order.scale(s);
        if self.is_zero() {
            let mut z = QExp::zero();
            z.order = order;
            return Ok(z);
        }
        let denom = self
            .denom
            .checked_mul(r)
            .expect("rescale lattice overflow");
        let lo = self.lo.checked_mul(p).expect("rescale exponent overflow");
        let mut coeffs = vec![Rat::zero(); (self.coeffs.len() - 1) * p as usize + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                coeffs[i * p as usize] = c.clone();
            }
        }
        Ok(QExp::from_raw(denom, lo, coeffs, order))
    }

    /// Substitutes `q -> -q`; defined only on integer exponent lattices.
    pub fn negate_q(&self) -> Result<QExp, QError> {
        if self.denom != 1 {
            return Err(QError::FractionalLattice { denom: self.denom });
        }
        let mut s = self.clone();
        for (i, c) in s.coeffs.iter_mut().enumerate() {
            if (s.lo + i as i64).rem_euclid(2) == 1 {
                *c = -std::mem::take(c);
            }
        }
        Ok(s)
    }

    // -- comparison ---------------------------------------------------------

    /// Compares all coefficients with exponent `<= t`.  Errs when either
    /// horizon falls short of `t`; otherwise reports the first difference.
    pub fn equal_to(&self, other: &QExp, t: &Rat) -> Result<Comparison, QError> {
        for h in [&self.order, &other.order] {
            if !h.covers(t) {
                return Err(QError::InsufficientTruncation {
                    requested: fmt_rat(t),
                    known: h.to_string(),
                });
            }
        }
        let (l, fa, fb) = QExp::aligned(self, other);
        let max_num = rat_floor(&(t * rat_int(l)))
            .to_i64()
            .expect("order numerator overflows i64");
        let lo = (self.lo * fa).min(other.lo * fb);
        let mut n = lo;
        while n <= max_num {
            let e = Rat::new(n.into(), l.into());
            let ca = self.coeff(&e).unwrap_or_else(Rat::zero);
            let cb = other.coeff(&e).unwrap_or_else(Rat::zero);
            if ca != cb {
                return Ok(Comparison::Differs {
                    exponent: e,
                    lhs: ca,
                    rhs: cb,
                });
            }
            n += 1;
        }
        Ok(Comparison::Equal)
    }

    // -- serialization helpers ---------------------------------------------

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("series serialization cannot fail")
    }

    pub fn from_json_str(s: &str) -> Result<QExp, QError> {
        serde_json::from_str(s).map_err(|e| QError::parse(format!("series JSON: {e}")))
    }
}

// ---------------------------------------------------------------------------
// Display
// ---------------------------------------------------------------------------

fn fmt_exponent(num: i64, denom: i64) -> String {
    if denom == 1 {
        if num == 1 {
            "q".into()
        } else if num >= 0 {
            format!("q^{num}")
        } else {
            format!("q^{{{num}}}")
        }
    } else {
        format!("q^{{{num}/{denom}}}")
    }
}

impl fmt::Display for QExp {
    /// Human form: `1 + q + 2q^4 - (1/2)q^{-1/2}` with terms ascending.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let num = self.lo + i as i64;
            let (g, nn, dd) = {
                let g = num.gcd(&self.denom);
                (g, num / g.max(1), self.denom / g.max(1))
            };
            let _ = g;
            let abs = c.abs();
            let neg = c.is_negative();
            if first {
                if neg {
                    write!(f, "-")?;
                }
                first = false;
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if num == 0 {
                write!(f, "{}", fmt_rat(&abs))?;
                continue;
            }
            if !abs.is_one() {
                if is_integer(&abs) {
                    write!(f, "{}", abs.numer())?;
                } else {
                    write!(f, "({})", fmt_rat(&abs))?;
                }
            }
            write!(f, "{}", fmt_exponent(nn, dd))?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct QExpWire {
    denom: i64,
    lo: i64,
    order: String,
    coeffs: Vec<String>,
}

impl Serialize for QExp {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        QExpWire {
            denom: self.denom,
            lo: self.lo,
            order: self.order.to_string(),
            coeffs: self.coeffs.iter().map(fmt_rat).collect(),
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for QExp {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let w = QExpWire::deserialize(de)?;
        if w.denom < 1 {
            return Err(D::Error::custom("denom must be >= 1"));
        }
        let order = if w.order == "inf" {
            Horizon::Infinite
        } else {
            Horizon::Finite(parse_rat(&w.order).map_err(D::Error::custom)?)
        };
        let coeffs = w
            .coeffs
            .iter()
            .map(|s| parse_rat(s))
            .collect::<Result<Vec<_>, _>>()
            .map_err(D::Error::custom)?;
        Ok(QExp::from_raw(w.denom, w.lo, coeffs, order))
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;

    fn q(p: i64, r: i64) -> Rat {
        rat(p, r)
    }

    /// Partition counts by brute-force dynamic programming, independent of
    /// the series engine.
    fn partitions(n_max: usize) -> Vec<u64> {
        let mut p = vec![0u64; n_max + 1];
        p[0] = 1;
        for part in 1..=n_max {
            for n in part..=n_max {
                p[n] += p[n - part];
            }
        }
        p
    }

    /// Euler product 1 - q - q^2 + q^5 + q^7 - ... truncated at `t`.
    fn euler_product(t: i64) -> QExp {
        let mut prod = QExp::one().truncated(&rat_int(t));
        for k in 1..=t {
            let factor = QExp::one().sub(&QExp::monomial(Rat::one(), rat_int(k)));
            prod = prod.mul(&factor);
        }
        prod
    }

    #[test]
    fn monomial_basics() {
        let m = QExp::monomial(q(1, 2), rat_int(-1));
        assert_eq!(m.to_string(), "(1/2)q^{-1}");
        assert_eq!(m.leading().unwrap().0, rat_int(-1));
        assert!(m.order().is_infinite());

        assert!(QExp::monomial(Rat::zero(), rat_int(3)).is_zero());
        assert_eq!(QExp::zero().to_string(), "0");
    }

    #[test]
    fn add_takes_minimum_order() {
        let x = QExp::monomial(Rat::one(), rat_int(1)).truncated(&rat_int(5));
        let y = QExp::monomial(Rat::one(), rat_int(2)).truncated(&rat_int(3));
        let s = x.add(&y);
        assert_eq!(s.order(), &Horizon::finite(rat_int(3)));
        assert_eq!(s.coeff(&rat_int(1)), Some(Rat::one()));
        assert_eq!(s.coeff(&rat_int(4)), None);
    }

    #[test]
    fn mul_exact_polynomials() {
        let a = QExp::one().add(&QExp::monomial(Rat::one(), rat_int(1)));
        let b = QExp::one().sub(&QExp::monomial(Rat::one(), rat_int(1)));
        let p = a.mul(&b);
        assert_eq!(p.to_string(), "1 - q^2");
        assert!(p.order().is_infinite());
    }

    #[test]
    fn mul_order_bound_is_conservative() {
        // (1 + q + O(q^5)) * (1 - q + O(q^3)): knowledge stops at exponent 3.
        let a = QExp::one()
            .add(&QExp::monomial(Rat::one(), rat_int(1)))
            .truncated(&rat_int(5));
        let b = QExp::one()
            .sub(&QExp::monomial(Rat::one(), rat_int(1)))
            .truncated(&rat_int(3));
        let p = a.mul(&b);
        assert_eq!(p.order(), &Horizon::finite(rat_int(3)));
        assert_eq!(p.coeff(&rat_int(2)), Some(rat_int(-1)));
    }

    #[test]
    fn mul_with_negative_lead_extends_knowledge() {
        // q^{-2} * (a known to 5) is known to 3.
        let shift = QExp::monomial(Rat::one(), rat_int(-2));
        let a = QExp::one().truncated(&rat_int(5));
        assert_eq!(shift.mul(&a).order(), &Horizon::finite(rat_int(3)));
    }

    #[test]
    fn invert_recovers_partitions() {
        let t = 7;
        let e = euler_product(t);
        let inv = e.invert(&rat_int(t)).unwrap();
        let p = partitions(t as usize);
        for n in 0..=t {
            assert_eq!(
                inv.coeff(&rat_int(n)).unwrap(),
                rat_int(p[n as usize] as i64),
                "partition count at {n}"
            );
        }
        // 1, 1, 2, 3, 5, 7, 11, 15.
        assert_eq!(
            p,
            vec![1, 1, 2, 3, 5, 7, 11, 15]
        );
        let prod = e.mul(&inv).truncated(&rat_int(t));
        assert!(prod.equal_to(&QExp::one(), &rat_int(t)).unwrap().is_equal());
    }

    #[test]
    fn invert_zero_fails() {
        assert!(matches!(
            QExp::zero().invert(&rat_int(5)),
            Err(QError::DivisionByZero)
        ));
    }

    #[test]
    fn invert_monomial() {
        let m = QExp::monomial(q(2, 1), q(1, 2));
        let inv = m.invert(&rat_int(4)).unwrap();
        assert_eq!(inv.coeff(&q(-1, 2)), Some(q(1, 2)));
        assert_eq!(inv.term_count(), 1);
    }

    #[test]
    fn log_matches_divisor_sums() {
        // log prod (1-q^k) has coefficient -sigma1(n)/n at q^n.
        let t = 8;
        let e = euler_product(t);
        let lg = e.log(&rat_int(t)).unwrap();
        for n in 1..=t {
            let s = crate::rat::sigma1(n as u64) as i64;
            assert_eq!(
                lg.coeff(&rat_int(n)).unwrap(),
                Rat::new((-s).into(), n.into()),
                "log coefficient at {n}"
            );
        }
        // First few: -1, -3/2, -4/3, -7/4.
        assert_eq!(lg.coeff(&rat_int(1)).unwrap(), rat_int(-1));
        assert_eq!(lg.coeff(&rat_int(2)).unwrap(), q(-3, 2));
        assert_eq!(lg.coeff(&rat_int(3)).unwrap(), q(-4, 3));
        assert_eq!(lg.coeff(&rat_int(4)).unwrap(), q(-7, 4));
    }

    #[test]
    fn log_of_one_is_zero() {
        let lg = QExp::one().log(&rat_int(9)).unwrap();
        assert!(lg.is_zero());
    }

    #[test]
    fn log_rejects_wrong_leading_term() {
        let a = QExp::monomial(q(2, 1), Rat::zero());
        assert!(matches!(
            a.log(&rat_int(4)),
            Err(QError::WrongLeadingTerm { .. })
        ));
        let b = QExp::monomial(Rat::one(), rat_int(1));
        assert!(matches!(
            b.log(&rat_int(4)),
            Err(QError::WrongLeadingTerm { .. })
        ));
    }

    #[test]
    fn exp_log_round_trip() {
        let t = rat_int(10);
        let a = QExp::one()
            .add(&QExp::monomial(q(3, 2), rat_int(1)))
            .add(&QExp::monomial(q(-1, 3), rat_int(2)))
            .truncated(&t);
        let back = a.log(&t).unwrap().exp(&t).unwrap();
        assert!(a.equal_to(&back, &t).unwrap().is_equal());
    }

    #[test]
    fn exp_requires_positive_exponents() {
        let a = QExp::one();
        assert!(matches!(
            a.exp(&rat_int(4)),
            Err(QError::BadExpArgument { .. })
        ));
    }

    #[test]
    fn rescale_examples() {
        let a = QExp::one().add(&QExp::monomial(Rat::one(), rat_int(1)));
        assert_eq!(a.rescale(&rat_int(2)).unwrap().to_string(), "1 + q^2");

        let half = QExp::monomial(Rat::one(), q(1, 2));
        let r = half.rescale(&rat_int(2)).unwrap();
        assert_eq!(r.denom(), 1);
        assert_eq!(r.to_string(), "q");

        // Round trip through a fractional scale.
        let t = rat_int(6);
        let s = q(3, 2);
        let b = a.truncated(&t);
        let rt = b
            .rescale(&s)
            .unwrap()
            .rescale(&s.recip())
            .unwrap();
        assert_eq!(rt, b);
    }

    #[test]
    fn rescale_rejects_nonpositive() {
        let a = QExp::one();
        assert!(a.rescale(&rat_int(0)).is_err());
        assert!(a.rescale(&rat_int(-2)).is_err());
    }

    #[test]
    fn negate_q_flips_odd_exponents() {
        // 1 + q + q^3 + q^6 -> 1 - q - q^3 + q^6.
        let a = QExp::from_terms(
            1,
            [
                (0, Rat::one()),
                (1, Rat::one()),
                (3, Rat::one()),
                (6, Rat::one()),
            ],
            Horizon::finite(rat_int(6)),
        );
        let b = a.negate_q().unwrap();
        assert_eq!(b.to_string(), "1 - q - q^3 + q^6");
        assert_eq!(b.negate_q().unwrap(), a);
    }

    #[test]
    fn negate_q_rejects_half_lattice() {
        let a = QExp::monomial(Rat::one(), q(1, 2));
        assert!(matches!(
            a.negate_q(),
            Err(QError::FractionalLattice { denom: 2 })
        ));
    }

    #[test]
    fn equal_to_reports_first_difference() {
        let t = rat_int(5);
        let a = QExp::one().truncated(&t);
        let b = QExp::one()
            .add(&QExp::monomial(q(1, 3), rat_int(2)))
            .truncated(&t);
        match a.equal_to(&b, &t).unwrap() {
            Comparison::Differs { exponent, lhs, rhs } => {
                assert_eq!(exponent, rat_int(2));
                assert_eq!(lhs, Rat::zero());
                assert_eq!(rhs, q(1, 3));
            }
            Comparison::Equal => panic!("expected difference"),
        }
    }

    #[test]
    fn equal_to_needs_enough_order() {
        let a = QExp::one().truncated(&rat_int(3));
        let b = QExp::one();
        assert!(matches!(
            a.equal_to(&b, &rat_int(4)),
            Err(QError::InsufficientTruncation { .. })
        ));
        assert!(a.equal_to(&b, &rat_int(3)).unwrap().is_equal());
    }

    #[test]
    fn lattice_reduction_is_automatic() {
        // q^{1/2} * q^{1/2} lands on the integer lattice.
        let h = QExp::monomial(Rat::one(), q(1, 2));
        let p = h.mul(&h);
        assert_eq!(p.denom(), 1);
        assert_eq!(p.to_string(), "q");
    }

    #[test]
    fn json_round_trip() {
        let t = rat_int(4);
        let a = QExp::one()
            .add(&QExp::monomial(q(-7, 2), q(1, 2)))
            .add(&QExp::monomial(rat_int(3), rat_int(2)))
            .truncated(&t);
        let s = a.to_json_string();
        let b = QExp::from_json_str(&s).unwrap();
        assert_eq!(a, b);

        let m = QExp::monomial(Rat::one(), q(-1, 2));
        let s2 = m.to_json_string();
        assert_eq!(
            s2,
            r#"{"denom":2,"lo":-1,"order":"inf","coeffs":["1"]}"#
        );
        assert_eq!(QExp::from_json_str(&s2).unwrap(), m);
    }

    #[test]
    fn json_rejects_bad_input() {
        assert!(QExp::from_json_str("{}").is_err());
        assert!(
            QExp::from_json_str(r#"{"denom":0,"lo":0,"order":"inf","coeffs":[]}"#).is_err()
        );
        assert!(QExp::from_json_str(
            r#"{"denom":1,"lo":0,"order":"x","coeffs":["1"]}"#
        )
        .is_err());
    }

    #[test]
    fn display_conventions() {
        let a = QExp::from_terms(
            2,
            [(-1, rat_int(-7)), (0, Rat::one()), (4, q(1, 2))],
            Horizon::Infinite,
        );
        assert_eq!(a.to_string(), "-7q^{-1/2} + 1 + (1/2)q^2");
    }
}
