//! Exact rational scalars.
//!
//! Everything in this crate computes over arbitrary-precision rationals so
//! that series coefficients and exponents are never rounded.  This module
//! fixes the scalar type ([`Rat`]) and provides the `p/q` string conventions
//! used by every serialized format and by the command line.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::QError;

/// Arbitrary-precision rational number.
pub type Rat = num_rational::BigRational;

/// Rational from an integer.
pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Rational `p/q`; panics on `q == 0`.
pub fn rat(p: i64, q: i64) -> Rat {
    assert!(q != 0, "zero denominator");
    Rat::new(BigInt::from(p), BigInt::from(q))
}

/// Parses `"p"` or `"p/q"` with optional sign, exact.
pub fn parse_rat(s: &str) -> Result<Rat, QError> {
    let t = s.trim();
    let bad = || QError::Parse(format!("malformed rational `{s}`"));
    if t.is_empty() {
        return Err(bad());
    }
    match t.split_once('/') {
        None => {
            let n: BigInt = t.parse().map_err(|_| bad())?;
            Ok(Rat::from_integer(n))
        }
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().map_err(|_| bad())?;
            let q: BigInt = q.trim().parse().map_err(|_| bad())?;
            if q.is_zero() {
                return Err(bad());
            }
            Ok(Rat::new(p, q))
        }
    }
}

/// Formats as `p` when integral, else `p/q` in lowest terms.
pub fn fmt_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Floor of a rational as `BigInt`.
pub fn rat_floor(r: &Rat) -> BigInt {
    r.floor().to_integer()
}

/// Ceiling of a rational as `BigInt`.
pub fn rat_ceil(r: &Rat) -> BigInt {
    r.ceil().to_integer()
}

/// `r^k` for integer `k`; `r` must be nonzero when `k < 0`.
pub fn rat_pow(r: &Rat, k: i64) -> Rat {
    if k == 0 {
        return Rat::one();
    }
    let base = if k < 0 {
        assert!(!r.is_zero(), "inverse of zero");
        r.recip()
    } else {
        r.clone()
    };
    let mut acc = Rat::one();
    let mut b = base;
    let mut e = k.unsigned_abs();
    while e > 0 {
        if e & 1 == 1 {
            acc *= &b;
        }
        e >>= 1;
        if e > 0 {
            let sq = &b * &b;
            b = sq;
        }
    }
    acc
}

/// True when `r` is a (possibly negative) integer.
pub fn is_integer(r: &Rat) -> bool {
    r.denom().is_one()
}

/// Sign-aware parity of an integer rational; panics on non-integers.
pub fn integer_is_odd(r: &Rat) -> bool {
    assert!(is_integer(r), "parity of a non-integer");
    r.numer().is_odd()
}

trait OddCheck {
    fn is_odd(&self) -> bool;
}

impl OddCheck for BigInt {
    fn is_odd(&self) -> bool {
        !num_integer::Integer::is_even(self)
    }
}

/// Sum of divisors of `k >= 1`.
pub fn sigma1(k: u64) -> u64 {
    assert!(k >= 1);
    let mut s = 0;
    let mut d = 1;
    while d * d <= k {
        if k.is_multiple_of(d) {
            s += d;
            let e = k / d;
            if e != d {
                s += e;
            }
        }
        d += 1;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format_round_trip() {
        for s in ["0", "7", "-3", "1/2", "-25/48", "11/60"] {
            let r = parse_rat(s).unwrap();
            assert_eq!(fmt_rat(&r), s);
        }
        assert_eq!(fmt_rat(&parse_rat("4/2").unwrap()), "2");
        assert_eq!(fmt_rat(&parse_rat("2/-4").unwrap()), "-1/2");
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("").is_err());
        assert!(parse_rat("x").is_err());
    }

    #[test]
    fn powers() {
        assert_eq!(rat_pow(&rat(2, 3), 2), rat(4, 9));
        assert_eq!(rat_pow(&rat(2, 3), -1), rat(3, 2));
        assert_eq!(rat_pow(&rat(5, 1), 0), rat_int(1));
        assert_eq!(rat_pow(&rat(-1, 1), 5), rat_int(-1));
    }

    #[test]
    fn divisor_sums() {
        // sigma1(n) for n = 1..8: 1, 3, 4, 7, 6, 12, 8, 15.
        let got: Vec<u64> = (1..=8).map(sigma1).collect();
        assert_eq!(got, vec![1, 3, 4, 7, 6, 12, 8, 15]);
    }
}
