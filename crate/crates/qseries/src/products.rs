//! Pochhammer products, theta series, and eta quotients.
//!
//! Contents:
//! * [`PochSpec`] / [`poch`]: finite and infinite products
//!   `(c*q^e; q^s)_n = prod (1 - c*q^{e+ks})`;
//! * [`theta_phi`] / [`theta_psi`]: the classical unary theta sums;
//! * [`jacobi_triple`]: both sides of the triple product under a monomial
//!   specialization of `z`;
//! * [`jacobi_cube`]: both sides of the cube identity for `(q;q)_inf^3`;
//! * [`EtaQuotient`]: scalar * q^vshift * prod_m (q^m;q^m)_inf^{e_m} with
//!   rational moduli, plus its expansion and JSON form.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::QError;
use crate::rat::{fmt_rat, parse_rat, rat_int, rat_pow, Rat};
use crate::series::{Horizon, QExp};

// ---------------------------------------------------------------------------
// Pochhammer products
// ---------------------------------------------------------------------------

/// Length of a Pochhammer product.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PochLen {
    Finite(u32),
    Infinite,
}

/// The product `(c*q^e; q^s)_n` with rational `c`, `e` and positive rational
/// step `s`.
#[derive(Clone, Debug, PartialEq)]
pub struct PochSpec {
    pub coeff: Rat,
    pub arg_exp: Rat,
    pub step: Rat,
    pub len: PochLen,
}

impl PochSpec {
    pub fn new(coeff: Rat, arg_exp: Rat, step: Rat, len: PochLen) -> Self {
        PochSpec {
            coeff,
            arg_exp,
            step,
            len,
        }
    }

    /// `(q^m; q^m)_inf`, the building block of eta quotients.
    pub fn j(modulus: Rat) -> Self {
        PochSpec::new(Rat::one(), modulus.clone(), modulus, PochLen::Infinite)
    }

    /// Sum of the negative factor exponents (0 when none).  A sound lower
    /// bound for the product's lowest exponent.
    pub fn negative_mass(&self) -> Rat {
        if self.coeff.is_zero() || !self.arg_exp.is_negative() {
            return Rat::zero();
        }
        let mut mass = Rat::zero();
        let mut k: u32 = 0;
        let mut e = self.arg_exp.clone();
        loop {
            if let PochLen::Finite(n) = self.len {
                if k >= n {
                    break;
                }
            }
            if !e.is_negative() {
                break;
            }
            mass += &e;
            e += &self.step;
            k += 1;
        }
        mass
    }
}

/// Expands a Pochhammer product truncated at exponent `t`.
///
/// Factors whose exponent exceeds the working bound cannot touch any
/// reported coefficient, which makes the truncation of infinite products
/// exact.  Negative factor exponents are supported: the working bound is
/// padded by the total negative mass so that cross terms are not lost.
pub fn poch(spec: &PochSpec, t: &Rat) -> Result<QExp, QError> {
    if !spec.step.is_positive() {
        return Err(QError::BadSpecialization {
            reason: format!("Pochhammer step must be positive, got {}", fmt_rat(&spec.step)),
        });
    }
    let order = Horizon::Finite(t.clone());
    if spec.coeff.is_zero() {
        return Ok(QExp::one().truncated(t));
    }
    let t_work = t - spec.negative_mass();
    let mut prod = QExp::one().truncated(&t_work);
    let mut e = spec.arg_exp.clone();
    let mut k: u32 = 0;
    loop {
        match spec.len {
            PochLen::Finite(n) => {
                if k >= n {
                    break;
                }
            }
            PochLen::Infinite => {
                if e > t_work {
                    break;
                }
            }
        }
        let factor = QExp::one().sub(&QExp::monomial(spec.coeff.clone(), e.clone()));
        if factor.is_zero() {
            // A factor (1 - 1*q^0): the whole product vanishes identically.
            let z = QExp::zero();
            return Ok(z.truncated_h(&order));
        }
        prod = prod.mul(&factor).truncated(&t_work);
        e += &spec.step;
        k += 1;
    }
    Ok(prod.truncated_h(&order))
}

// ---------------------------------------------------------------------------
// Theta series
// ---------------------------------------------------------------------------

/// `sum_{n in Z} q^{n^2}` truncated at `t`.
pub fn theta_phi(t: &Rat) -> QExp {
    let mut terms: Vec<(i64, Rat)> = Vec::new();
    if Rat::zero() <= *t {
        terms.push((0, Rat::one()));
    }
    let mut n: i64 = 1;
    loop {
        let e = rat_int(n * n);
        if e > *t {
            break;
        }
        terms.push((n * n, rat_int(2)));
        n += 1;
    }
    QExp::from_terms(1, terms, Horizon::Finite(t.clone()))
}

/// `sum_{n >= 0} q^{n(n+1)/2}` truncated at `t`.
pub fn theta_psi(t: &Rat) -> QExp {
    let mut terms: Vec<(i64, Rat)> = Vec::new();
    let mut n: i64 = 0;
    loop {
        let e = n * (n + 1) / 2;
        if rat_int(e) > *t {
            break;
        }
        terms.push((e, Rat::one()));
        n += 1;
    }
    QExp::from_terms(1, terms, Horizon::Finite(t.clone()))
}

// ---------------------------------------------------------------------------
// Jacobi triple product and cube identity
// ---------------------------------------------------------------------------

/// Both sides of the triple product at `z = z_coeff * q^{z_exp}`:
/// `(q, z, q/z; q)_inf = sum_{n in Z} (-1)^n q^{n(n-1)/2} z^n`.
///
/// Returns `(product_side, sum_side)` truncated at `t`.  A specialization
/// that makes a product factor vanish (for example `z = q`) produces the
/// zero series on both sides.
pub fn jacobi_triple(z_coeff: &Rat, z_exp: &Rat, t: &Rat) -> Result<(QExp, QExp), QError> {
    if z_coeff.is_zero() {
        return Err(QError::BadSpecialization {
            reason: "triple product needs z != 0".into(),
        });
    }
    let one = Rat::one();
    let specs = [
        PochSpec::new(one.clone(), one.clone(), one.clone(), PochLen::Infinite),
        PochSpec::new(z_coeff.clone(), z_exp.clone(), one.clone(), PochLen::Infinite),
        PochSpec::new(z_coeff.recip(), &one - z_exp, one.clone(), PochLen::Infinite),
    ];
    let pad: Rat = specs.iter().map(|s| s.negative_mass()).sum();
    let t_work = t - pad;
    let mut lhs = QExp::one().truncated(&t_work);
    for s in &specs {
        lhs = lhs.mul(&poch(s, &t_work)?);
    }
    let lhs = lhs.truncated(t);

    // Bilateral sum, split at n = 0 and reindexed for the negative tail.
    // The exponent at index n is n(n-1)/2 + n*z_exp, bounded below by
    // n(n-1)/2 - |n|*|z_exp|; once that floor exceeds t no later index of
    // the same sign can contribute.
    let floor_exceeds = |n: i64| rat_int(n * (n - 1) / 2) - rat_int(n.abs()) * z_exp.abs() > *t;
    let mut sum = QExp::zero().truncated(t);
    let mut n: i64 = 0;
    while !(n > 0 && floor_exceeds(n)) {
        let e = rat_int(n * (n - 1) / 2) + rat_int(n) * z_exp;
        if e <= *t {
            let c = rat_pow(&rat_int(-1), n) * rat_pow(z_coeff, n);
            sum = sum.add(&QExp::monomial(c, e).truncated(t));
        }
        n += 1;
    }
    let mut m: i64 = 1;
    while !floor_exceeds(-m) {
        let e = rat_int(m * (m + 1) / 2) - rat_int(m) * z_exp;
        if e <= *t {
            let c = rat_pow(&rat_int(-1), m) * rat_pow(z_coeff, -m);
            sum = sum.add(&QExp::monomial(c, e).truncated(t));
        }
        m += 1;
    }
    Ok((lhs, sum.truncated(t)))
}

/// Both sides of `(q;q)_inf^3 = sum_{n >= 0} (-1)^n (2n+1) q^{n(n+1)/2}`
/// truncated at `t`.
pub fn jacobi_cube(t: &Rat) -> Result<(QExp, QExp), QError> {
    let j1 = poch(&PochSpec::j(Rat::one()), t)?;
    let lhs = j1.mul(&j1).mul(&j1).truncated(t);
    let mut terms: Vec<(i64, Rat)> = Vec::new();
    let mut n: i64 = 0;
    loop {
        let e = n * (n + 1) / 2;
        if rat_int(e) > *t {
            break;
        }
        terms.push((e, rat_pow(&rat_int(-1), n) * rat_int(2 * n + 1)));
        n += 1;
    }
    let rhs = QExp::from_terms(1, terms, Horizon::Finite(t.clone()));
    Ok((lhs, rhs))
}

// ---------------------------------------------------------------------------
// Eta quotients
// ---------------------------------------------------------------------------

/// `scalar * q^vshift * prod_m (q^m;q^m)_inf^{e_m}` with positive rational
/// moduli `m` and nonzero integer exponents `e_m`.
///
/// The Dedekind-style presentation (an extra `q^{m/24}` per factor) is a
/// display convention; [`EtaQuotient::from_eta_factors`] folds those shifts
/// into `vshift` so that the stored form is always the plain one.
#[derive(Clone, Debug, PartialEq)]
pub struct EtaQuotient {
    pub scalar: Rat,
    pub vshift: Rat,
    exps: Vec<(Rat, i64)>,
}

impl EtaQuotient {
    pub fn new<I>(scalar: Rat, vshift: Rat, exps: I) -> Result<Self, QError>
    where
        I: IntoIterator<Item = (Rat, i64)>,
    {
        let mut map: BTreeMap<Rat, i64> = BTreeMap::new();
        for (m, e) in exps {
            if !m.is_positive() {
                return Err(QError::BadSpecialization {
                    reason: format!("eta modulus must be positive, got {}", fmt_rat(&m)),
                });
            }
            *map.entry(m).or_insert(0) += e;
        }
        map.retain(|_, e| *e != 0);
        Ok(EtaQuotient {
            scalar,
            vshift,
            exps: map.into_iter().collect(),
        })
    }

    /// Builds from Dedekind-style factors: each `(m, e)` contributes
    /// `q^{m*e/24}` to the leading power.
    pub fn from_eta_factors<I>(scalar: Rat, exps: I) -> Result<Self, QError>
    where
        I: IntoIterator<Item = (Rat, i64)>,
    {
        let exps: Vec<(Rat, i64)> = exps.into_iter().collect();
        let mut vshift = Rat::zero();
        for (m, e) in &exps {
            vshift += m * rat_int(*e) / rat_int(24);
        }
        EtaQuotient::new(scalar, vshift, exps)
    }

    /// Sorted `(modulus, exponent)` pairs, zero exponents removed.
    pub fn exps(&self) -> &[(Rat, i64)] {
        &self.exps
    }

    /// Half the sum of the exponents.
    pub fn weight(&self) -> Rat {
        let s: i64 = self.exps.iter().map(|(_, e)| *e).sum();
        Rat::new(s.into(), 2.into())
    }

    /// Pointwise product of two quotients.
    pub fn combine(&self, other: &EtaQuotient) -> EtaQuotient {
        let exps = self
            .exps
            .iter()
            .chain(other.exps.iter())
            .map(|(m, e)| (m.clone(), *e));
        EtaQuotient::new(
            &self.scalar * &other.scalar,
            &self.vshift + &other.vshift,
            exps,
        )
        .expect("moduli already validated")
    }

    /// Expands the quotient as a series truncated at `t`.
    pub fn expand(&self, t: &Rat) -> Result<QExp, QError> {
        if self.scalar.is_zero() {
            return Ok(QExp::zero().truncated(t));
        }
        let rel = t - &self.vshift;
        let mut acc = QExp::one().truncated(&rel);
        for (m, e) in &self.exps {
            let base = poch(&PochSpec::j(m.clone()), &rel)?;
            let factor = if *e < 0 { base.invert(&rel)? } else { base };
            for _ in 0..e.unsigned_abs() {
                acc = acc.mul(&factor).truncated(&rel);
            }
        }
        Ok(acc.mul_monomial(&self.scalar, &self.vshift).truncated(t))
    }

    /// Compact map form used in reports: `{1:-1, 2:2}`.
    pub fn brace_string(&self) -> String {
        let body = self
            .exps
            .iter()
            .map(|(m, e)| format!("{}:{}", fmt_rat(m), e))
            .collect::<Vec<_>>()
            .join(", ");
        format!("{{{body}}}")
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("eta quotient serialization cannot fail")
    }

    pub fn from_json_str(s: &str) -> Result<Self, QError> {
        serde_json::from_str(s).map_err(|e| QError::parse(format!("eta quotient JSON: {e}")))
    }
}

impl fmt::Display for EtaQuotient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "scalar {}, vshift {}, exps {}",
            fmt_rat(&self.scalar),
            fmt_rat(&self.vshift),
            self.brace_string()
        )
    }
}

/// Free-function form of [`EtaQuotient::expand`].
pub fn eta_expand(e: &EtaQuotient, t: &Rat) -> Result<QExp, QError> {
    e.expand(t)
}

#[derive(Serialize, Deserialize)]
struct EtaWire {
    scalar: String,
    vshift: String,
    exps: BTreeMap<String, i64>,
}

impl Serialize for EtaQuotient {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        EtaWire {
            scalar: fmt_rat(&self.scalar),
            vshift: fmt_rat(&self.vshift),
            exps: self
                .exps
                .iter()
                .map(|(m, e)| (fmt_rat(m), *e))
                .collect(),
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for EtaQuotient {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let w = EtaWire::deserialize(de)?;
        let scalar = parse_rat(&w.scalar).map_err(D::Error::custom)?;
        let vshift = parse_rat(&w.vshift).map_err(D::Error::custom)?;
        let exps = w
            .exps
            .iter()
            .map(|(m, e)| parse_rat(m).map(|m| (m, *e)))
            .collect::<Result<Vec<_>, _>>()
            .map_err(D::Error::custom)?;
        EtaQuotient::new(scalar, vshift, exps).map_err(D::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
