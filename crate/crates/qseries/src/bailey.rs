//! Bailey pairs and their transformation formulas.
//!
//! A pair `(alpha, beta)` relative to `a` satisfies
//! `beta_n = sum_{k<=n} alpha_k / ((p;p)_{n-k} (a p;p)_{n+k})` at base
//! `p = q^s`, with `a` restricted to 1 or `p`.  The pairs are stored as
//! term generators (index to series), and everything downstream checks
//! series equality at explicit truncation orders.
//!
//! Contents: the four built-in pairs, the defining-relation verifier, the
//! two finite x-identities the pairs come from, and the three transforms
//! that turn a pair into a q-series identity.

use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::QError;
use crate::products::{poch, theta_phi, theta_psi, PochLen, PochSpec};
use crate::rat::{fmt_rat, rat, rat_int, Rat};
use crate::series::{Comparison, QExp};

// ---------------------------------------------------------------------------
// Pair type
// ---------------------------------------------------------------------------

/// The relative parameter: `a = 1` or `a = p` at base `p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AClass {
    One,
    Q,
}

/// The built-in pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairId {
    Bp1,
    Bp2,
    Bp3,
    Bp4,
}

impl PairId {
    pub const ALL: [PairId; 4] = [PairId::Bp1, PairId::Bp2, PairId::Bp3, PairId::Bp4];

    pub fn parse(s: &str) -> Result<Self, QError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bp1" => Ok(PairId::Bp1),
            "bp2" => Ok(PairId::Bp2),
            "bp3" => Ok(PairId::Bp3),
            "bp4" => Ok(PairId::Bp4),
            other => Err(QError::parse(format!(
                "unknown pair '{other}', expected bp1..bp4"
            ))),
        }
    }
}

impl fmt::Display for PairId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PairId::Bp1 => "bp1",
            PairId::Bp2 => "bp2",
            PairId::Bp3 => "bp3",
            PairId::Bp4 => "bp4",
        };
        f.write_str(s)
    }
}

type TermGen = Box<dyn Fn(i64, &Rat) -> Result<QExp, QError> + Send + Sync>;

/// A Bailey pair instantiated at base `q^scale`.
pub struct BaileyPair {
    pub name: String,
    pub a_class: AClass,
    pub scale: Rat,
    alpha: TermGen,
    beta: TermGen,
}

impl BaileyPair {
    pub fn new(
        name: impl Into<String>,
        a_class: AClass,
        scale: Rat,
        alpha: TermGen,
        beta: TermGen,
    ) -> Result<Self, QError> {
        if !scale.is_positive() {
            return Err(QError::BadSpecialization {
                reason: format!("pair scale must be positive, got {}", fmt_rat(&scale)),
            });
        }
        Ok(BaileyPair {
            name: name.into(),
            a_class,
            scale,
            alpha,
            beta,
        })
    }

    /// The `n`-th alpha term, truncated at `t` if not exact.
    pub fn alpha(&self, n: i64, t: &Rat) -> Result<QExp, QError> {
        (self.alpha)(n, t)
    }

    /// The `n`-th beta term, truncated at `t`.
    pub fn beta(&self, n: i64, t: &Rat) -> Result<QExp, QError> {
        (self.beta)(n, t)
    }

    /// Exponent of the relative parameter: 0 for `a = 1`, `s` for `a = p`.
    fn a_exp(&self) -> Rat {
        match self.a_class {
            AClass::One => Rat::zero(),
            AClass::Q => self.scale.clone(),
        }
    }
}

// ---------------------------------------------------------------------------
// Built-in pairs
// ---------------------------------------------------------------------------

/// Builds one of the four built-in pairs at base `q^scale`.
///
/// The first two are relative to `a = 1` with index-0 terms 1; the last two
/// are relative to `a = p`.  The fourth pair's displayed formulas already
/// give `alpha_0 = beta_0 = p^{1/2}`, and that value (not 1) is what the
/// defining relation requires, so no index-0 override is applied there.
pub fn builtin_pair(which: PairId, scale: Rat) -> Result<BaileyPair, QError> {
    if !scale.is_positive() {
        return Err(QError::BadSpecialization {
            reason: format!("pair scale must be positive, got {}", fmt_rat(&scale)),
        });
    }
    let s = scale.clone();
    let name = format!("{which}");

    // Polynomial alpha terms are exact; the t argument is unused there.
    let alpha: TermGen = {
        let s = s.clone();
        match which {
            PairId::Bp1 => Box::new(move |n, _t| {
                if n == 0 {
                    return Ok(QExp::one());
                }
                let lo = QExp::monomial(rat_int(2 * n + 1), &s * rat(n * (n - 1), 2));
                let hi = QExp::monomial(rat_int(2 * n - 1), &s * rat(n * (n + 1), 2));
                Ok(lo.sub(&hi))
            }),
            PairId::Bp2 => Box::new(move |n, _t| {
                if n == 0 {
                    return Ok(QExp::one());
                }
                let lo = QExp::monomial(rat_int(2 * n + 1), &s * rat(n * (n + 1), 2));
                let hi = QExp::monomial(rat_int(2 * n - 1), &s * rat(n * (n - 1), 2));
                Ok(lo.sub(&hi))
            }),
            PairId::Bp3 => Box::new(move |n, _t| {
                let lo = QExp::monomial(rat_int(n + 1), &s * rat(n * n, 2));
                let hi = QExp::monomial(rat_int(n), &s * rat((n + 1) * (n + 1), 2));
                Ok(lo.sub(&hi))
            }),
            PairId::Bp4 => Box::new(move |n, _t| {
                let lo = QExp::monomial(rat_int(n + 1), &s * rat((n + 1) * (n + 1), 2));
                let hi = QExp::monomial(rat_int(n), &s * rat(n * n, 2));
                Ok(lo.sub(&hi))
            }),
        }
    };

    let beta: TermGen = {
        let s = s.clone();
        match which {
            PairId::Bp1 | PairId::Bp2 => Box::new(move |n, t| {
                // (-1;p)_n^2 / (p;p)_{2n}, times p^n for the second pair.
                let top = poch(
                    &PochSpec::new(rat_int(-1), Rat::zero(), s.clone(), finite(n)?),
                    t,
                )?;
                let bot = poch(
                    &PochSpec::new(Rat::one(), s.clone(), s.clone(), finite(2 * n)?),
                    t,
                )?
                .invert(t)?;
                let mut out = top.mul(&top).mul(&bot).truncated(t);
                if which == PairId::Bp2 {
                    out = out.mul_monomial(&Rat::one(), &(&s * rat_int(n)));
                }
                Ok(out)
            }),
            PairId::Bp3 | PairId::Bp4 => Box::new(move |n, t| {
                // (-p^{1/2};p)_n^2 / (p^2;p)_{2n}, times p^{n+1/2} for the
                // fourth pair.
                let top = poch(
                    &PochSpec::new(rat_int(-1), &s / rat_int(2), s.clone(), finite(n)?),
                    t,
                )?;
                let bot = poch(
                    &PochSpec::new(Rat::one(), &s * rat_int(2), s.clone(), finite(2 * n)?),
                    t,
                )?
                .invert(t)?;
                let mut out = top.mul(&top).mul(&bot).truncated(t);
                if which == PairId::Bp4 {
                    out = out.mul_monomial(&Rat::one(), &(&s * (rat_int(n) + rat(1, 2))));
                }
                Ok(out)
            }),
        }
    };

    let a_class = match which {
        PairId::Bp1 | PairId::Bp2 => AClass::One,
        PairId::Bp3 | PairId::Bp4 => AClass::Q,
    };
    BaileyPair::new(name, a_class, scale, alpha, beta)
}

fn finite(n: i64) -> Result<PochLen, QError> {
    u32::try_from(n)
        .map(PochLen::Finite)
        .map_err(|_| QError::BadSpecialization {
            reason: format!("negative product length {n}"),
        })
}

// ---------------------------------------------------------------------------
// Defining-relation verification
// ---------------------------------------------------------------------------

/// Checks `beta_n` against the defining sum for each `n <= n_max` at order
/// `t`.  Returns the first failing index with its comparison, or `None`
/// when every index passes.
pub fn verify_pair(
    p: &BaileyPair,
    n_max: u32,
    t: &Rat,
) -> Result<Option<(u32, Comparison)>, QError> {
    let s = &p.scale;
    let a_exp = p.a_exp();
    for n in 0..=(n_max as i64) {
        let mut rhs = QExp::zero().truncated(t);
        for k in 0..=n {
            let alpha = p.alpha(k, t)?;
            let left = poch(
                &PochSpec::new(Rat::one(), s.clone(), s.clone(), finite(n - k)?),
                t,
            )?
            .invert(t)?;
            let right = poch(
                &PochSpec::new(Rat::one(), &a_exp + s, s.clone(), finite(n + k)?),
                t,
            )?
            .invert(t)?;
            rhs = rhs.add(&alpha.mul(&left).mul(&right).truncated(t));
        }
        let beta = p.beta(n, t)?;
        match beta.equal_to(&rhs, t)? {
            Comparison::Equal => {}
            diff => return Ok(Some((n as u32, diff))),
        }
    }
    Ok(None)
}

// ---------------------------------------------------------------------------
// Finite x-identities
// ---------------------------------------------------------------------------

/// The two finite identities behind the built-in pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FiniteIdentity {
    /// `(-x^{-1};q)_n (-xq;q)_n / (q;q)_{2n}
    ///   = 1/(q;q)_n^2 + sum_{r=1}^n (q^{r(r+1)/2} x^r + q^{r(r-1)/2} x^{-r})
    ///     / ((q;q)_{n-r} (q;q)_{n+r})`.
    Even,
    /// `(-x^{-1}q^{1/2};q)_n (-xq^{1/2};q)_{n+1} / (q^2;q)_{2n}
    ///   = sum_{r=0}^n (q^{r^2/2} x^{-r} + q^{(r+1)^2/2} x^{r+1})
    ///     / ((q;q)_{n-r} (q^2;q)_{n+r})`.
    Odd,
}

/// Verifies one finite identity at `x = q^{x_exp}` for every `n <= n_max`,
/// comparing both sides as series at order `t`.  Returns the first failure
/// or `None`.
pub fn finite_identity_check(
    which: FiniteIdentity,
    x_exp: &Rat,
    n_max: u32,
    t: &Rat,
) -> Result<Option<(u32, Comparison)>, QError> {
    let one = Rat::one();
    for n in 0..=(n_max as i64) {
        // Numerator factors of the product side, with exact leading mass.
        let (fac_a, fac_b, bot) = match which {
            FiniteIdentity::Even => (
                PochSpec::new(rat_int(-1), -x_exp, one.clone(), finite(n)?),
                PochSpec::new(rat_int(-1), x_exp + &one, one.clone(), finite(n)?),
                PochSpec::new(one.clone(), one.clone(), one.clone(), finite(2 * n)?),
            ),
            FiniteIdentity::Odd => (
                PochSpec::new(rat_int(-1), rat(1, 2) - x_exp, one.clone(), finite(n)?),
                PochSpec::new(rat_int(-1), x_exp + rat(1, 2), one.clone(), finite(n + 1)?),
                PochSpec::new(one.clone(), rat_int(2), one.clone(), finite(2 * n)?),
            ),
        };
        let pad = fac_a.negative_mass() + fac_b.negative_mass();
        let tw = t - &pad;
        let a = poch(&fac_a, &tw)?;
        let b = poch(&fac_b, &tw)?;
        for (label, series) in [("first numerator factor", &a), ("second numerator factor", &b)]
        {
            if series.is_zero() {
                return Err(QError::VanishingFactor {
                    factor: format!("{label} at index {n}"),
                });
            }
        }
        let lhs = a
            .mul(&b)
            .mul(&poch(&bot, &tw)?.invert(&tw)?)
            .truncated(t);

        let mut rhs = QExp::zero().truncated(t);
        let r_lo = match which {
            FiniteIdentity::Even => {
                // The r = 0 term is written separately as 1/(q;q)_n^2.
                let f = poch(
                    &PochSpec::new(one.clone(), one.clone(), one.clone(), finite(n)?),
                    t,
                )?
                .invert(t)?;
                rhs = rhs.add(&f.mul(&f).truncated(t));
                1
            }
            FiniteIdentity::Odd => 0,
        };
        for r in r_lo..=n {
            let (e_plus, e_minus, bot_right) = match which {
                FiniteIdentity::Even => (
                    rat(r * (r + 1), 2) + x_exp * rat_int(r),
                    rat(r * (r - 1), 2) - x_exp * rat_int(r),
                    PochSpec::new(one.clone(), one.clone(), one.clone(), finite(n + r)?),
                ),
                FiniteIdentity::Odd => (
                    rat((r + 1) * (r + 1), 2) + x_exp * rat_int(r + 1),
                    rat(r * r, 2) - x_exp * rat_int(r),
                    PochSpec::new(one.clone(), rat_int(2), one.clone(), finite(n + r)?),
                ),
            };
            let mut floor = Rat::zero();
            if e_plus < floor {
                floor = e_plus.clone();
            }
            if e_minus < floor {
                floor = e_minus.clone();
            }
            let tw = t - floor;
            let pair = QExp::monomial(one.clone(), e_plus).add(&QExp::monomial(one.clone(), e_minus));
            let left = poch(
                &PochSpec::new(one.clone(), one.clone(), one.clone(), finite(n - r)?),
                &tw,
            )?
            .invert(&tw)?;
            let right = poch(&bot_right, &tw)?.invert(&tw)?;
            rhs = rhs.add(&pair.mul(&left).mul(&right).truncated(t));
        }
        match lhs.equal_to(&rhs, t)? {
            Comparison::Equal => {}
            diff => return Ok(Some((n as u32, diff))),
        }
    }
    Ok(None)
}

// ---------------------------------------------------------------------------
// Transforms
// ---------------------------------------------------------------------------

/// The three sum-to-product transformations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Transform {
    /// `sum q^{n^2} (-q;q^2)_n beta_n = (1/psi(-q)) sum q^{r^2} alpha_r`,
    /// for pairs relative to 1 at base `q^2`.
    Tbl,
    /// `sum q^{n(n+1)/2} (-q;q)_n beta_n
    ///   = ((1-q)/phi(-q)) sum q^{r(r+1)/2} alpha_r`,
    /// for pairs relative to `q` at base `q`.
    S2bl,
    /// `sum a^n p^{n^2} beta_n = (1/(ap;p)_inf) sum a^r p^{r^2} alpha_r`,
    /// for either class at any base `p = q^s`.
    T128,
}

impl Transform {
    pub fn parse(s: &str) -> Result<Self, QError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tbl" => Ok(Transform::Tbl),
            "s2bl" => Ok(Transform::S2bl),
            "t128" => Ok(Transform::T128),
            other => Err(QError::parse(format!(
                "unknown transform '{other}', expected tbl, s2bl, or t128"
            ))),
        }
    }
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Transform::Tbl => "tbl",
            Transform::S2bl => "s2bl",
            Transform::T128 => "t128",
        })
    }
}

/// Applies a transform to a pair, returning `(lhs, rhs)` at order `t`.
/// The sides are equal exactly when the pair satisfies the defining
/// relation.
pub fn apply_transform(
    p: &BaileyPair,
    which: Transform,
    t: &Rat,
) -> Result<(QExp, QExp), QError> {
    match which {
        Transform::Tbl => {
            if p.a_class != AClass::One || p.scale != rat_int(2) {
                return Err(QError::TransformMismatch {
                    transform: "tbl".into(),
                    requirement: "a pair relative to 1 at base q^2".into(),
                });
            }
            // lhs: sum q^{n^2} (-q;q^2)_n beta_n.
            let mut lhs = QExp::zero().truncated(t);
            let mut n: i64 = 0;
            while rat_int(n * n) <= *t {
                let weight = poch(
                    &PochSpec::new(rat_int(-1), Rat::one(), rat_int(2), finite(n)?),
                    t,
                )?;
                let term = p
                    .beta(n, t)?
                    .mul(&weight)
                    .mul_monomial(&Rat::one(), &rat_int(n * n));
                lhs = lhs.add(&term.truncated(t));
                n += 1;
            }
            // rhs: (1/psi(-q)) sum q^{r^2} alpha_r.
            let psi_neg = theta_psi(t).negate_q()?;
            let mut sum = QExp::zero().truncated(t);
            let mut r: i64 = 0;
            while rat_int(r * r) <= *t {
                let term = p.alpha(r, t)?.mul_monomial(&Rat::one(), &rat_int(r * r));
                sum = sum.add(&term.truncated(t));
                r += 1;
            }
            Ok((lhs, sum.mul(&psi_neg.invert(t)?).truncated(t)))
        }
        Transform::S2bl => {
            if p.a_class != AClass::Q || p.scale != Rat::one() {
                return Err(QError::TransformMismatch {
                    transform: "s2bl".into(),
                    requirement: "a pair relative to q at base q".into(),
                });
            }
            let mut lhs = QExp::zero().truncated(t);
            let mut n: i64 = 0;
            while rat(n * (n + 1), 2) <= *t {
                let weight = poch(
                    &PochSpec::new(rat_int(-1), Rat::one(), Rat::one(), finite(n)?),
                    t,
                )?;
                let term = p
                    .beta(n, t)?
                    .mul(&weight)
                    .mul_monomial(&Rat::one(), &rat(n * (n + 1), 2));
                lhs = lhs.add(&term.truncated(t));
                n += 1;
            }
            let phi_neg = theta_phi(t).negate_q()?;
            let mut sum = QExp::zero().truncated(t);
            let mut r: i64 = 0;
            while rat(r * (r + 1), 2) <= *t {
                let term = p
                    .alpha(r, t)?
                    .mul_monomial(&Rat::one(), &rat(r * (r + 1), 2));
                sum = sum.add(&term.truncated(t));
                r += 1;
            }
            let front = QExp::one().sub(&QExp::monomial(Rat::one(), Rat::one()));
            Ok((lhs, sum.mul(&phi_neg.invert(t)?).mul(&front).truncated(t)))
        }
        Transform::T128 => {
            let s = &p.scale;
            let a_exp = p.a_exp();
            let mut lhs = QExp::zero().truncated(t);
            let mut n: i64 = 0;
            loop {
                let e = s * rat_int(n * n) + &a_exp * rat_int(n);
                if e > *t {
                    break;
                }
                let term = p.beta(n, t)?.mul_monomial(&Rat::one(), &e);
                lhs = lhs.add(&term.truncated(t));
                n += 1;
            }
            let front = poch(
                &PochSpec::new(Rat::one(), &a_exp + s, s.clone(), PochLen::Infinite),
                t,
            )?
            .invert(t)?;
            let mut sum = QExp::zero().truncated(t);
            let mut r: i64 = 0;
            loop {
                let e = s * rat_int(r * r) + &a_exp * rat_int(r);
                if e > *t {
                    break;
                }
                let term = p.alpha(r, t)?.mul_monomial(&Rat::one(), &e);
                sum = sum.add(&term.truncated(t));
                r += 1;
            }
            Ok((lhs, sum.mul(&front).truncated(t)))
        }
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    fn t(n: i64) -> Rat {
        rat_int(n)
    }

    #[test]
    fn builtin_term_values() {
        let p1 = builtin_pair(PairId::Bp1, Rat::one()).unwrap();
        assert_eq!(p1.alpha(2, &t(10)).unwrap().to_string(), "5q - 3q^3");
        assert_eq!(p1.alpha(0, &t(10)).unwrap().to_string(), "1");
        assert_eq!(p1.beta(0, &t(10)).unwrap().to_string(), "1");

        // Third pair, index 1: (1+q^{1/2})^2 / ((1-q^2)(1-q^3)).
        let p3 = builtin_pair(PairId::Bp3, Rat::one()).unwrap();
        let h = t(8);
        let unit = QExp::one().add(&QExp::monomial(Rat::one(), rat(1, 2)));
        let denom = poch(
            &PochSpec::new(Rat::one(), rat_int(2), Rat::one(), PochLen::Finite(2)),
            &h,
        )
        .unwrap();
        let expect = unit.mul(&unit).mul(&denom.invert(&h).unwrap());
        assert!(p3
            .beta(1, &h)
            .unwrap()
            .equal_to(&expect, &h)
            .unwrap()
            .is_equal());

        // Fourth pair: both index-0 terms are p^{1/2}.
        for s in [Rat::one(), rat_int(2)] {
            let p4 = builtin_pair(PairId::Bp4, s.clone()).unwrap();
            let want = QExp::monomial(Rat::one(), &s / rat_int(2));
            assert_eq!(p4.alpha(0, &t(10)).unwrap(), want);
            assert!(p4
                .beta(0, &t(10))
                .unwrap()
                .equal_to(&want, &t(10))
                .unwrap()
                .is_equal());
        }
        // The other three normalize to 1 at index 0.
        for which in [PairId::Bp1, PairId::Bp2, PairId::Bp3] {
            let p = builtin_pair(which, rat_int(2)).unwrap();
            assert_eq!(p.alpha(0, &t(10)).unwrap().to_string(), "1");
            assert_eq!(
                p.beta(0, &t(10)).unwrap().leading().unwrap(),
                (Rat::zero(), &Rat::one())
            );
        }
    }

    #[test]
    fn defining_relation_holds_for_builtins() {
        for which in PairId::ALL {
            for s in [Rat::one(), rat_int(2)] {
                let p = builtin_pair(which, s).unwrap();
                let verdict = verify_pair(&p, 10, &t(20)).unwrap();
                assert!(verdict.is_none(), "{which} failed: {verdict:?}");
            }
        }
    }

    #[test]
    fn corrupted_pair_reports_first_difference() {
        let good = builtin_pair(PairId::Bp1, Rat::one()).unwrap();
        let bad = BaileyPair::new(
            "bp1-corrupted",
            AClass::One,
            Rat::one(),
            Box::new({
                let inner = builtin_pair(PairId::Bp1, Rat::one()).unwrap();
                move |n, t| inner.alpha(n, t)
            }),
            Box::new(move |n, t| {
                let b = good.beta(n, t)?;
                Ok(if n == 1 {
                    b.mul_monomial(&rat_int(2), &Rat::zero())
                } else {
                    b
                })
            }),
        )
        .unwrap();
        let verdict = verify_pair(&bad, 4, &t(15)).unwrap();
        assert_eq!(verdict.unwrap().0, 1);
    }

    #[test]
    fn finite_identities_hold() {
        for x in [rat(1, 2), rat_int(1), rat_int(2), rat_int(3)] {
            for which in [FiniteIdentity::Even, FiniteIdentity::Odd] {
                let verdict = finite_identity_check(which, &x, 8, &t(20)).unwrap();
                assert!(verdict.is_none(), "{which:?} at x_exp {x} failed: {verdict:?}");
            }
        }
    }

    #[test]
    fn transforms_balance_for_builtins() {
        let h = t(20);
        // Any class or scale feeds the square-exponent transform.
        for which in PairId::ALL {
            for s in [Rat::one(), rat_int(2)] {
                let p = builtin_pair(which, s).unwrap();
                let (l, r) = apply_transform(&p, Transform::T128, &h).unwrap();
                assert!(
                    l.equal_to(&r, &h).unwrap().is_equal(),
                    "t128 imbalance for {which}"
                );
            }
        }
        // Base-q^2 pairs relative to 1.
        for which in [PairId::Bp1, PairId::Bp2] {
            let p = builtin_pair(which, rat_int(2)).unwrap();
            let (l, r) = apply_transform(&p, Transform::Tbl, &h).unwrap();
            assert!(l.equal_to(&r, &h).unwrap().is_equal(), "tbl imbalance for {which}");
        }
        // Base-q pairs relative to q.
        for which in [PairId::Bp3, PairId::Bp4] {
            let p = builtin_pair(which, Rat::one()).unwrap();
            let (l, r) = apply_transform(&p, Transform::S2bl, &h).unwrap();
            assert!(l.equal_to(&r, &h).unwrap().is_equal(), "s2bl imbalance for {which}");
        }
    }

    #[test]
    fn transform_preconditions() {
        let p1_scale1 = builtin_pair(PairId::Bp1, Rat::one()).unwrap();
        assert!(matches!(
            apply_transform(&p1_scale1, Transform::Tbl, &t(10)),
            Err(QError::TransformMismatch { .. })
        ));
        let p3 = builtin_pair(PairId::Bp3, rat_int(2)).unwrap();
        assert!(matches!(
            apply_transform(&p3, Transform::S2bl, &t(10)),
            Err(QError::TransformMismatch { .. })
        ));
        let p1 = builtin_pair(PairId::Bp1, Rat::one()).unwrap();
        assert!(matches!(
            apply_transform(&p1, Transform::S2bl, &t(10)),
            Err(QError::TransformMismatch { .. })
        ));
    }

    #[test]
    fn pair_parsing() {
        assert_eq!(PairId::parse("BP3").unwrap(), PairId::Bp3);
        assert!(PairId::parse("bp9").is_err());
        assert_eq!(Transform::parse("T128").unwrap(), Transform::T128);
        assert!(Transform::parse("nope").is_err());
        assert!(builtin_pair(PairId::Bp1, Rat::zero()).is_err());
    }
}
