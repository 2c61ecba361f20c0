//! A catalog of checkable q-series identities and its runner.
//!
//! Each record pairs two expressions with a truncation order; verification
//! expands both sides exactly and compares coefficients, reporting the
//! first difference when they disagree.  The built-in catalog collects the
//! sum-to-product identities, theta evaluations, multi-sum reindexings,
//! and dual-expansion closed forms that this toolkit is built around,
//! including one deliberately failing probe that pins down a sign
//! discrepancy between a displayed dual shift vector and the one the dual
//! transform computes.

use std::time::{Duration, Instant};

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::QError;
use crate::expr::{eval_expr, Expr, FactorLen, SumFactor, SumSpec};
use crate::nahm::{ModularQuadruple, ModularTriple};
use crate::products::{poch, PochLen, PochSpec};
use crate::rat::{fmt_rat, parse_rat, rat, rat_int, Rat};
use crate::series::{Comparison, QExp};

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

/// One checkable identity: two expressions expected to agree (or, for a
/// probe, to disagree) up to `order`.
#[derive(Clone, Debug, PartialEq)]
pub struct IdentityRecord {
    pub name: String,
    pub lhs: Expr,
    pub rhs: Expr,
    pub order: Rat,
    pub tags: Vec<String>,
    pub expect_fail: bool,
    pub note: String,
}

impl IdentityRecord {
    pub fn new(name: impl Into<String>, lhs: Expr, rhs: Expr, order: Rat) -> Self {
        IdentityRecord {
            name: name.into(),
            lhs,
            rhs,
            order,
            tags: Vec::new(),
            expect_fail: false,
            note: String::new(),
        }
    }

    pub fn with_tags(mut self, tags: &[&str]) -> Self {
        self.tags = tags.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn expected_to_fail(mut self, note: impl Into<String>) -> Self {
        self.expect_fail = true;
        self.note = note.into();
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }
}

/// Result of verifying a single record.
#[derive(Clone, Debug)]
pub struct VerifyReport {
    pub name: String,
    pub comparison: Comparison,
    pub lhs_terms: usize,
    pub rhs_terms: usize,
    pub elapsed: Duration,
}

/// Expands both sides of a record and compares them at its order.
pub fn verify_identity(rec: &IdentityRecord) -> Result<VerifyReport, QError> {
    if !rec.order.is_positive() {
        return Err(QError::BadSpecialization {
            reason: format!("record '{}' has nonpositive order", rec.name),
        });
    }
    let start = Instant::now();
    let lhs = eval_expr(&rec.lhs, &rec.order)?;
    let rhs = eval_expr(&rec.rhs, &rec.order)?;
    let comparison = lhs.equal_to(&rhs, &rec.order)?;
    Ok(VerifyReport {
        name: rec.name.clone(),
        comparison,
        lhs_terms: lhs.term_count(),
        rhs_terms: rhs.term_count(),
        elapsed: start.elapsed(),
    })
}

// ---------------------------------------------------------------------------
// Catalog runner
// ---------------------------------------------------------------------------

/// Outcome of one record inside a catalog run.
#[derive(Clone, Debug)]
pub enum RecordOutcome {
    Pass,
    /// The record is marked expect-fail and did fail: the suite stays green.
    ExpectedFail { diff: Comparison },
    Fail { diff: Comparison },
    /// The record is marked expect-fail but passed: treated as a failure.
    UnexpectedPass,
    Error { message: String },
}

impl RecordOutcome {
    pub fn is_green(&self) -> bool {
        matches!(self, RecordOutcome::Pass | RecordOutcome::ExpectedFail { .. })
    }
}

#[derive(Clone, Debug)]
pub struct RecordResult {
    pub name: String,
    pub outcome: RecordOutcome,
    pub elapsed: Duration,
}

#[derive(Clone, Debug, Default)]
pub struct CatalogSummary {
    pub results: Vec<RecordResult>,
}

impl CatalogSummary {
    pub fn all_green(&self) -> bool {
        self.results.iter().all(|r| r.outcome.is_green())
    }

    pub fn passes(&self) -> usize {
        self.results
            .iter()
            .filter(|r| matches!(r.outcome, RecordOutcome::Pass))
            .count()
    }
}

/// Verifies records (optionally filtered by a name substring, optionally
/// at an overridden order) in parallel, preserving record order in the
/// summary.
pub fn run_catalog(
    records: &[IdentityRecord],
    order_override: Option<&Rat>,
    filter: Option<&str>,
) -> CatalogSummary {
    let selected: Vec<&IdentityRecord> = records
        .iter()
        .filter(|r| filter.is_none_or(|f| r.name.contains(f)))
        .collect();
    let results = selected
        .par_iter()
        .map(|rec| {
            let mut rec = (*rec).clone();
            if let Some(t) = order_override {
                rec.order = t.clone();
            }
            let start = Instant::now();
            let outcome = match verify_identity(&rec) {
                Err(e) => RecordOutcome::Error {
                    message: e.to_string(),
                },
                Ok(report) => match (report.comparison, rec.expect_fail) {
                    (Comparison::Equal, false) => RecordOutcome::Pass,
                    (Comparison::Equal, true) => RecordOutcome::UnexpectedPass,
                    (diff, true) => RecordOutcome::ExpectedFail { diff },
                    (diff, false) => RecordOutcome::Fail { diff },
                },
            };
            RecordResult {
                name: rec.name.clone(),
                outcome,
                elapsed: start.elapsed(),
            }
        })
        .collect();
    CatalogSummary { results }
}

// ---------------------------------------------------------------------------
// q-Gauss summation
// ---------------------------------------------------------------------------

/// Checks the q-Gauss summation at `a = q^{a_exp}`, `b = q^{b_exp}`,
/// `c = q^{c_exp}`:
///
/// `sum_n (a;q)_n (b;q)_n / ((q;q)_n (c;q)_n) * (c/ab)^n
///    = (c/a;q)_inf (c/b;q)_inf / ((c;q)_inf (c/ab;q)_inf)`.
///
/// Requires `c_exp - a_exp - b_exp > 0` so the term exponents grow, and
/// `c_exp` not a nonpositive integer so `(c;q)_n` never vanishes.
pub fn q_gauss_check(a_exp: &Rat, b_exp: &Rat, c_exp: &Rat, t: &Rat) -> Result<Comparison, QError> {
    let gap = c_exp - a_exp - b_exp;
    if !gap.is_positive() {
        return Err(QError::BadSpecialization {
            reason: format!(
                "q-Gauss needs c - a - b > 0 in the exponents, got {}",
                fmt_rat(&gap)
            ),
        });
    }
    if c_exp.is_integer() && !c_exp.is_positive() {
        return Err(QError::VanishingFactor {
            factor: format!("(q^{}; q)_n", fmt_rat(c_exp)),
        });
    }

    let one = Rat::one();
    let mut lhs = QExp::zero().truncated(t);
    let mut n: u32 = 0;
    loop {
        let a_spec = PochSpec::new(one.clone(), a_exp.clone(), one.clone(), PochLen::Finite(n));
        let b_spec = PochSpec::new(one.clone(), b_exp.clone(), one.clone(), PochLen::Finite(n));
        let mass = a_spec.negative_mass() + b_spec.negative_mass();
        let lead = &gap * rat_int(n as i64) + &mass;
        if lead > *t {
            break;
        }
        let tw = t - &mass;
        let top = poch(&a_spec, &tw)?.mul(&poch(&b_spec, &tw)?);
        let bot = poch(
            &PochSpec::new(one.clone(), one.clone(), one.clone(), PochLen::Finite(n)),
            &tw,
        )?
        .mul(&poch(
            &PochSpec::new(one.clone(), c_exp.clone(), one.clone(), PochLen::Finite(n)),
            &tw,
        )?);
        let term = top
            .mul(&bot.invert(&tw)?)
            .mul_monomial(&one, &(&gap * rat_int(n as i64)));
        lhs = lhs.add(&term.truncated(t));
        n += 1;
    }

    let rhs = Expr::Mul(vec![
        Expr::poch_inf(one.clone(), c_exp - a_exp, one.clone()),
        Expr::poch_inf(one.clone(), c_exp - b_exp, one.clone()),
        Expr::inv(Expr::poch_inf(one.clone(), c_exp.clone(), one.clone())),
        Expr::inv(Expr::poch_inf(one.clone(), gap.clone(), one.clone())),
    ]);
    lhs.equal_to(&eval_expr(&rhs, t)?, t)
}

// ---------------------------------------------------------------------------
// Built-in catalog
// ---------------------------------------------------------------------------

fn r(s: &str) -> Rat {
    parse_rat(s).expect("static rational")
}

fn rows(data: &[&[&str]]) -> Vec<Vec<Rat>> {
    data.iter()
        .map(|row| row.iter().map(|v| r(v)).collect())
        .collect()
}

fn vecr(data: &[&str]) -> Vec<Rat> {
    data.iter().map(|v| r(v)).collect()
}

/// `(q^m; q^m)_{c0 + c1 * n_idx}` denominator-style factor.
fn step_factor(m: &str, c0: i64, c1: i64, idx: usize, rank: usize) -> SumFactor {
    SumFactor::new(Rat::one(), r(m), r(m), FactorLen::linear(c0, c1, idx, rank))
}

/// `(-q^{arg}; q^{step})_{c0 + c1 * n_idx}` numerator-style factor.
fn neg_factor(arg: &str, step: &str, c0: i64, c1: i64, idx: usize, rank: usize) -> SumFactor {
    SumFactor::new(-Rat::one(), r(arg), r(step), FactorLen::linear(c0, c1, idx, rank))
}

/// Rank-one sum `sum q^{(s/2) n^2 + b n + c}` with no factors yet.
fn sum1(s: &str, b: &str, c: &str) -> SumSpec {
    SumSpec::new(vec![vec![r(s)]], vec![r(b)], r(c))
}

/// Quotient of infinite products given as (modulus, exponent) pairs.
fn eta(pairs: &[(&str, i64)]) -> Expr {
    Expr::eta(
        &pairs
            .iter()
            .map(|(m, e)| (r(m), *e))
            .collect::<Vec<(Rat, i64)>>(),
    )
}

fn mulv(parts: Vec<Expr>) -> Expr {
    Expr::Mul(parts)
}

fn addv(parts: Vec<Expr>) -> Expr {
    Expr::Add(parts)
}

fn sc(v: &str) -> Expr {
    Expr::Scalar(r(v))
}

fn pinf(coeff: &str, arg: &str, step: &str) -> Expr {
    Expr::poch_inf(r(coeff), r(arg), r(step))
}

/// The three-variable sums behind the modularity analysis: quadratic part
/// fixed, bases `(q, q^2, q^2)`, shift vector varying.
fn triple_sum(quad: &[&[&str]], linear: &[&str]) -> Expr {
    let mut s = SumSpec::new(rows(quad), vecr(linear), Rat::zero());
    s = s.with_denom(step_factor("1", 0, 1, 0, 3));
    s = s.with_denom(step_factor("2", 0, 1, 1, 3));
    s = s.with_denom(step_factor("2", 0, 1, 2, 3));
    Expr::Sum(s)
}

const HALF_QUAD: &[&[&str]] = &[&["1", "0", "-1"], &["0", "2", "-1"], &["-1", "-1", "2"]];
const MIZ_QUAD: &[&[&str]] = &[&["3", "2", "4"], &["2", "4", "4"], &["4", "4", "8"]];

/// Rank-four matrix with unit diagonal and -1/2 couplings to the last
/// variable, and its inverse; the pair the reindexing identities run on.
fn coupled4() -> Vec<Vec<Rat>> {
    rows(&[
        &["1", "0", "0", "-1/2"],
        &["0", "1", "0", "-1/2"],
        &["0", "0", "1", "-1/2"],
        &["-1/2", "-1/2", "-1/2", "1"],
    ])
}

fn coupled4_inv() -> Vec<Vec<Rat>> {
    rows(&[
        &["2", "1", "1", "2"],
        &["1", "2", "1", "2"],
        &["1", "1", "2", "2"],
        &["2", "2", "2", "4"],
    ])
}

fn nahm4(a: Vec<Vec<Rat>>, b: &[&str]) -> Expr {
    Expr::Nahm {
        spec: ModularTriple::new(a, vecr(b), Rat::zero()).to_quadruple(),
        monomials: None,
    }
}

/// Rank-three generalized sum with bases `(q, q^2, q^2)` written as a
/// quadruple for the engine; `a` holds the raw (possibly asymmetric)
/// matrix whose column scaling by the bases is symmetric.
fn gnahm3(a: &[&[&str]], b: &[&str], c: &str) -> Expr {
    Expr::Nahm {
        spec: ModularQuadruple::new(rows(a), vecr(b), r(c), vec![1, 2, 2]),
        monomials: None,
    }
}

/// The four single sums at the heart of the closed-form evaluations:
/// `sum q^{k^2 + shift} (-1;q)_{2k+e} (-q^e;q^2)_k / (q^2;q^2)_{2k+e}`
/// with `e = 0` (even family) or `e = 1` (odd family).
fn key_sum(linear: &str, constant: &str, odd: bool) -> Expr {
    let e = if odd { 1 } else { 0 };
    let mut s = sum1("2", linear, constant);
    s = s.with_numer(neg_factor("0", "1", e, 2, 0, 1));
    s = s.with_numer(if odd {
        neg_factor("1", "2", 0, 1, 0, 1)
    } else {
        neg_factor("0", "2", 0, 1, 0, 1)
    });
    s = s.with_denom(step_factor("2", e, 2, 0, 1));
    Expr::Sum(s)
}

/// Every identity the toolkit ships with, at its default order.
pub fn builtin_catalog() -> Vec<IdentityRecord> {
    let t25 = rat_int(25);
    let mut out: Vec<IdentityRecord> = Vec::new();
    let mut push = |rec: IdentityRecord| out.push(rec);

    // --- classic sum-to-product pairs -----------------------------------
    push(
        IdentityRecord::new(
            "rr-1",
            Expr::Sum(sum1("2", "0", "0").with_denom(step_factor("1", 0, 1, 0, 1))),
            Expr::inv(mulv(vec![pinf("1", "1", "5"), pinf("1", "4", "5")])),
            t25.clone(),
        )
        .with_tags(&["RR"]),
    );
    push(
        IdentityRecord::new(
            "rr-2",
            Expr::Sum(sum1("2", "1", "0").with_denom(step_factor("1", 0, 1, 0, 1))),
            Expr::inv(mulv(vec![pinf("1", "2", "5"), pinf("1", "3", "5")])),
            t25.clone(),
        )
        .with_tags(&["RR"]),
    );

    // --- geometric and binomial exponential sums -------------------------
    for (name, z) in [
        ("euler-1-z1", "1"),
        ("euler-1-z2", "2"),
        ("euler-1-zhalf", "1/2"),
    ] {
        push(
            IdentityRecord::new(
                name,
                Expr::Sum(sum1("0", z, "0").with_denom(step_factor("1", 0, 1, 0, 1))),
                Expr::inv(pinf("1", z, "1")),
                t25.clone(),
            )
            .with_tags(&["Euler-1"]),
        );
    }
    for (name, z, b) in [
        ("euler-2-z1", "1", "1/2"),
        ("euler-2-z2", "2", "3/2"),
        ("euler-2-zhalf", "1/2", "0"),
    ] {
        push(
            IdentityRecord::new(
                name,
                Expr::Sum(sum1("1", b, "0").with_denom(step_factor("1", 0, 1, 0, 1))),
                pinf("-1", z, "1"),
                t25.clone(),
            )
            .with_tags(&["Euler-2"]),
        );
    }

    // --- theta sums vs product forms -------------------------------------
    push(
        IdentityRecord::new(
            "phi-sum",
            addv(vec![
                Expr::Sum(sum1("2", "0", "0")),
                Expr::Sum(sum1("2", "2", "1")),
            ]),
            Expr::Theta {
                kind: crate::expr::ThetaKind::Phi,
                negate: false,
            },
            t25.clone(),
        )
        .with_tags(&["phi-defn"])
        .with_note("bilateral square sum split at the origin"),
    );
    push(
        IdentityRecord::new(
            "psi-sum",
            Expr::Sum(sum1("1", "1/2", "0")),
            Expr::Theta {
                kind: crate::expr::ThetaKind::Psi,
                negate: false,
            },
            t25.clone(),
        )
        .with_tags(&["psi-defn"]),
    );

    // --- triple product specializations ----------------------------------
    push(
        IdentityRecord::new(
            "jtp-half",
            mulv(vec![
                pinf("1", "1", "1"),
                pinf("1", "1/2", "1"),
                pinf("1", "1/2", "1"),
            ]),
            addv(vec![
                Expr::Sum(sum1("1", "0", "0").with_geo(vec![-Rat::one()])),
                Expr::Sum(
                    sum1("1", "1", "1/2")
                        .with_coeff(-Rat::one(), vec![Rat::zero()])
                        .with_geo(vec![-Rat::one()]),
                ),
            ]),
            t25.clone(),
        )
        .with_tags(&["JTP"])
        .with_note("z = q^{1/2}"),
    );
    push(
        IdentityRecord::new(
            "jtp-negq",
            mulv(vec![
                sc("2"),
                pinf("1", "1", "1"),
                pinf("-1", "1", "1"),
                pinf("-1", "1", "1"),
            ]),
            mulv(vec![
                sc("2"),
                Expr::Theta {
                    kind: crate::expr::ThetaKind::Psi,
                    negate: false,
                },
            ]),
            t25.clone(),
        )
        .with_tags(&["JTP"])
        .with_note("z = -q; both bilateral tails collapse onto the same exponents"),
    );

    // --- weighted bilateral sums ------------------------------------------
    push(
        IdentityRecord::new(
            "jacobi-cube",
            eta(&[("1", 3)]),
            Expr::Sum(
                sum1("1", "1/2", "0")
                    .with_coeff(Rat::one(), vec![rat_int(2)])
                    .with_geo(vec![-Rat::one()]),
            ),
            t25.clone(),
        )
        .with_tags(&["eq-Jacobi-id"]),
    );
    push(
        IdentityRecord::new(
            "jacobi-cor-1",
            addv(vec![
                Expr::Sum(sum1("3", "1/2", "0").with_coeff(Rat::one(), vec![rat_int(6)])),
                Expr::Sum(sum1("3", "5/2", "1").with_coeff(rat_int(-5), vec![rat_int(-6)])),
            ]),
            eta(&[("1", 5), ("2", -2)]),
            t25.clone(),
        )
        .with_tags(&["Jacobi-cor-1"]),
    );
    push(
        IdentityRecord::new(
            "jacobi-cor-2",
            addv(vec![
                Expr::Sum(sum1("6", "2", "0").with_coeff(Rat::one(), vec![rat_int(3)])),
                Expr::Sum(sum1("6", "4", "1").with_coeff(rat_int(-2), vec![rat_int(-3)])),
            ]),
            eta(&[("1", 2), ("4", 2), ("2", -1)]),
            t25.clone(),
        )
        .with_tags(&["Jacobi-cor-2"])
        .with_note(
            "weight is 3n+1; the source display says 3n+2, which already fails at the \
             constant term, and the derivations downstream use 3n+1",
        ),
    );

    // --- the four single-sum evaluations ----------------------------------
    let half = sc("1/2");
    push(
        IdentityRecord::new(
            "key-id-1",
            key_sum("0", "0", false),
            mulv(vec![
                half.clone(),
                addv(vec![
                    mulv(vec![sc("3"), eta(&[("2", 3), ("1", -2), ("4", -1)])]),
                    Expr::neg(eta(&[("1", 2), ("2", 1), ("4", -1)])),
                ]),
            ]),
            t25.clone(),
        )
        .with_tags(&["key-id-1"]),
    );
    push(
        IdentityRecord::new(
            "key-id-2",
            key_sum("2", "0", false),
            mulv(vec![
                half.clone(),
                addv(vec![
                    eta(&[("2", 3), ("1", -2), ("4", -1)]),
                    eta(&[("1", 2), ("2", 1), ("4", -1)]),
                ]),
            ]),
            t25.clone(),
        )
        .with_tags(&["key-id-2"]),
    );
    push(
        IdentityRecord::new(
            "key-id-3",
            key_sum("1", "0", true),
            mulv(vec![
                half.clone(),
                addv(vec![
                    mulv(vec![sc("3"), eta(&[("4", 1), ("1", -1)])]),
                    eta(&[("1", 3), ("4", 1), ("2", -2)]),
                ]),
            ]),
            t25.clone(),
        )
        .with_tags(&["key-id-3"]),
    );
    push(
        IdentityRecord::new(
            "key-id-4",
            key_sum("3", "1", true),
            mulv(vec![
                half.clone(),
                addv(vec![
                    eta(&[("4", 1), ("1", -1)]),
                    Expr::neg(eta(&[("1", 3), ("4", 1), ("2", -2)])),
                ]),
            ]),
            t25.clone(),
        )
        .with_tags(&["key-id-4"]),
    );

    // --- the squared-factor single sums ------------------------------------
    push(
        IdentityRecord::new(
            "cor-id-1",
            Expr::Sum(
                sum1("2", "0", "0")
                    .with_numer(neg_factor("0", "1", 0, 1, 0, 1))
                    .with_numer(neg_factor("0", "1", 0, 1, 0, 1))
                    .with_denom(step_factor("1", 0, 2, 0, 1)),
            ),
            addv(vec![
                mulv(vec![sc("4/3"), eta(&[("2", 1), ("3", 2), ("1", -2), ("6", -1)])]),
                mulv(vec![sc("-1/3"), eta(&[("1", 4), ("2", -2)])]),
            ]),
            t25.clone(),
        )
        .with_tags(&["cor-id-1"]),
    );
    push(
        IdentityRecord::new(
            "cor-id-2",
            Expr::Sum(
                sum1("2", "1", "0")
                    .with_numer(neg_factor("0", "1", 0, 1, 0, 1))
                    .with_numer(neg_factor("0", "1", 0, 1, 0, 1))
                    .with_denom(step_factor("1", 0, 2, 0, 1)),
            ),
            addv(vec![
                mulv(vec![sc("1/3"), eta(&[("1", 4), ("2", -2)])]),
                mulv(vec![sc("2/3"), eta(&[("2", 1), ("3", 2), ("1", -2), ("6", -1)])]),
            ]),
            t25.clone(),
        )
        .with_tags(&["cor-id-2"]),
    );
    push(
        IdentityRecord::new(
            "cor-id-3",
            Expr::Sum(
                sum1("4", "2", "0")
                    .with_numer(neg_factor("1", "2", 0, 1, 0, 1))
                    .with_numer(neg_factor("1", "2", 0, 1, 0, 1))
                    .with_denom(step_factor("2", 1, 2, 0, 1)),
            ),
            addv(vec![
                mulv(vec![sc("1/3"), eta(&[("1", 2), ("4", 2), ("2", -2)])]),
                mulv(vec![
                    sc("2/3"),
                    eta(&[("2", 1), ("3", 1), ("12", 1), ("1", -1), ("4", -1), ("6", -1)]),
                ]),
            ]),
            t25.clone(),
        )
        .with_tags(&["cor-id-3"]),
    );
    push(
        IdentityRecord::new(
            "cor-id-4",
            Expr::Sum(
                sum1("4", "4", "0")
                    .with_numer(neg_factor("1", "2", 0, 1, 0, 1))
                    .with_numer(neg_factor("1", "2", 0, 1, 0, 1))
                    .with_denom(step_factor("2", 1, 2, 0, 1)),
            ),
            addv(vec![
                mulv(vec![
                    sc("-1/3"),
                    Expr::qpow(rat_int(-1)),
                    eta(&[("1", 2), ("4", 2), ("2", -2)]),
                ]),
                mulv(vec![
                    sc("1/3"),
                    Expr::qpow(rat_int(-1)),
                    eta(&[("2", 1), ("3", 1), ("12", 1), ("1", -1), ("4", -1), ("6", -1)]),
                ]),
            ]),
            t25.clone(),
        )
        .with_tags(&["cor-id-4"]),
    );

    // --- the rank-three evaluations ----------------------------------------
    push(
        IdentityRecord::new(
            "thm-id-0",
            triple_sum(HALF_QUAD, &["-1/2", "-1/2", "0"]),
            mulv(vec![
                sc("4"),
                addv(vec![sc("1"), Expr::qpow(rat(-1, 2))]),
                pinf("1", "2", "2"),
                Expr::inv(pinf("1", "1/2", "1/2")),
            ]),
            t25.clone(),
        )
        .with_tags(&["thm-id-0", "half-lattice"]),
    );
    push(
        IdentityRecord::new(
            "thm-id-1",
            triple_sum(HALF_QUAD, &["1/2", "1", "-1"]),
            mulv(vec![sc("3"), eta(&[("2", 3), ("1", -3)])]),
            t25.clone(),
        )
        .with_tags(&["thm-id-1"]),
    );
    push(
        IdentityRecord::new(
            "thm-id-2",
            triple_sum(HALF_QUAD, &["1/2", "1", "0"]),
            eta(&[("2", 3), ("1", -3)]),
            t25.clone(),
        )
        .with_tags(&["thm-id-2"]),
    );
    push(
        IdentityRecord::new(
            "exam5-3",
            triple_sum(MIZ_QUAD, &["-1", "0", "-1"]),
            pinf("-1", "1/2", "1"),
            t25.clone(),
        )
        .with_tags(&["id-exam5-3"]),
    );
    push(
        IdentityRecord::new(
            "ww-id-1",
            triple_sum(MIZ_QUAD, &["1/2", "1", "0"]),
            mulv(vec![
                sc("1/4"),
                addv(vec![
                    mulv(vec![sc("3"), eta(&[("2", 1), ("1", -1)])]),
                    eta(&[("1", 3), ("2", -1)]),
                ]),
            ]),
            t25.clone(),
        )
        .with_tags(&["WW-id-1"]),
    );
    push(
        IdentityRecord::new(
            "ww-id-2",
            triple_sum(MIZ_QUAD, &["5/2", "3", "4"]),
            mulv(vec![
                sc("1/4"),
                Expr::qpow(rat_int(-1)),
                addv(vec![
                    eta(&[("2", 1), ("1", -1)]),
                    Expr::neg(eta(&[("1", 3), ("2", -1)])),
                ]),
            ]),
            t25.clone(),
        )
        .with_tags(&["WW-id-2"]),
    );

    // --- even/odd strata of the rank-three sums ----------------------------
    let closed_half = mulv(vec![
        addv(vec![sc("1"), Expr::qpow(rat(-1, 2))]),
        Expr::inv(pinf("1", "1/2", "1")),
    ]);
    push(
        IdentityRecord::new(
            "s0-result-0",
            mulv(vec![
                pinf("-1", "1/2", "2"),
                Expr::Sum(
                    sum1("2", "-3/2", "0")
                        .with_numer(neg_factor("3/2", "2", 0, 1, 0, 1))
                        .with_denom(step_factor("1", 0, 2, 0, 1)),
                ),
            ]),
            closed_half.clone(),
            t25.clone(),
        )
        .with_tags(&["0-S0-result"])
        .with_note("index-free factor pulled out of the even stratum"),
    );
    push(
        IdentityRecord::new(
            "s1-result-0",
            mulv(vec![
                pinf("-1", "-1/2", "2"),
                Expr::Sum(
                    sum1("2", "-1/2", "0")
                        .with_numer(neg_factor("5/2", "2", 0, 1, 0, 1))
                        .with_denom(step_factor("1", 1, 2, 0, 1)),
                ),
            ]),
            closed_half,
            t25.clone(),
        )
        .with_tags(&["0-S1-result"])
        .with_note("index-free factor pulled out of the odd stratum"),
    );
    push(
        IdentityRecord::new(
            "s0-result",
            mulv(vec![pinf("-1", "2", "2"), key_sum("0", "0", false)]),
            mulv(vec![
                half.clone(),
                addv(vec![
                    mulv(vec![sc("3"), eta(&[("2", 2), ("1", -2)])]),
                    Expr::neg(eta(&[("1", 2)])),
                ]),
            ]),
            t25.clone(),
        )
        .with_tags(&["S0-result"]),
    );
    push(
        IdentityRecord::new(
            "s1-result",
            mulv(vec![pinf("-1", "1", "2"), key_sum("1", "0", true)]),
            mulv(vec![
                half.clone(),
                addv(vec![
                    mulv(vec![sc("3"), eta(&[("2", 2), ("1", -2)])]),
                    eta(&[("1", 2)]),
                ]),
            ]),
            t25.clone(),
        )
        .with_tags(&["S1-result"]),
    );
    push(
        IdentityRecord::new(
            "t0-result",
            mulv(vec![pinf("-1", "2", "2"), key_sum("2", "0", false)]),
            mulv(vec![
                half.clone(),
                addv(vec![eta(&[("2", 2), ("1", -2)]), eta(&[("1", 2)])]),
            ]),
            t25.clone(),
        )
        .with_tags(&["T0-result"]),
    );
    push(
        IdentityRecord::new(
            "t1-result",
            mulv(vec![pinf("-1", "1", "2"), key_sum("3", "1", true)]),
            mulv(vec![
                half.clone(),
                addv(vec![
                    eta(&[("2", 2), ("1", -2)]),
                    Expr::neg(eta(&[("1", 2)])),
                ]),
            ]),
            t25.clone(),
        )
        .with_tags(&["T1-result"]),
    );

    // --- the diagonal-splitting identity, summed against q^{mn} ------------
    for (name, b1, rb0, rb1) in [
        ("id-transform-m1", "1/2", "0", "1"),
        ("id-transform-m2", "3/2", "1", "2"),
    ] {
        push(
            IdentityRecord::new(
                name,
                Expr::Sum(sum1("1", b1, "0").with_denom(step_factor("1", 0, 1, 0, 1))),
                Expr::Sum(
                    SumSpec::new(rows(&[&["2", "0"], &["0", "2"]]), vecr(&[rb0, rb1]), Rat::zero())
                        .with_denom(step_factor("2", 0, 1, 0, 2))
                        .with_denom(step_factor("2", 0, 1, 1, 2)),
                ),
                t25.clone(),
            )
            .with_tags(&["id-transform"])
            .with_note("both sides summed against q^{mn}; the diagonal split becomes a rank-two sum"),
        );
    }

    // --- rank-three to rank-four reindexing --------------------------------
    let reindex_cases: [(&str, &[&[&str]], bool, &[&str], &[&str]); 6] = [
        (
            "reindex-sep-b1",
            &[&["1", "0", "-1/2"], &["0", "1", "-1/2"], &["-1", "-1/2", "1"]],
            false,
            &["1/2", "1", "-1"],
            &["0", "1/2", "1/2", "-1/2"],
        ),
        (
            "reindex-sep-b2",
            &[&["1", "0", "-1/2"], &["0", "1", "-1/2"], &["-1", "-1/2", "1"]],
            false,
            &["1/2", "1", "0"],
            &["0", "1/2", "1/2", "0"],
        ),
        (
            "reindex-sep-b0",
            &[&["1", "0", "-1/2"], &["0", "1", "-1/2"], &["-1", "-1/2", "1"]],
            false,
            &["-1/2", "-1/2", "0"],
            &["-1/2", "0", "-1/4", "0"],
        ),
        (
            "reindex-mizuno-b1",
            &[&["3", "1", "2"], &["2", "2", "2"], &["4", "2", "4"]],
            true,
            &["1/2", "1", "0"],
            &["0", "1/2", "1/2", "0"],
        ),
        (
            "reindex-mizuno-b2",
            &[&["3", "1", "2"], &["2", "2", "2"], &["4", "2", "4"]],
            true,
            &["5/2", "3", "4"],
            &["1", "3/2", "3/2", "2"],
        ),
        (
            "reindex-mizuno-exam5",
            &[&["3", "1", "2"], &["2", "2", "2"], &["4", "2", "4"]],
            true,
            &["-1", "0", "-1"],
            &["-3/4", "-1/4", "0", "-1/2"],
        ),
    ];
    for (name, a3, inverse_side, b3, b4) in reindex_cases {
        let a4 = if inverse_side { coupled4_inv() } else { coupled4() };
        push(
            IdentityRecord::new(
                name,
                Expr::rescale(gnahm3(a3, b3, "0"), rat_int(2)),
                Expr::rescale(nahm4(a4, b4), rat_int(4)),
                rat_int(24),
            )
            .with_tags(&["122-f", "M-f"])
            .with_note("first variable split along the diagonal; rank-four side runs in the square root"),
        );
    }

    // --- dual expansions as series identities ------------------------------
    push(
        IdentityRecord::new(
            "dual-exp-1",
            Expr::rescale(nahm4(coupled4_inv(), &["0", "1/2", "1/2", "0"]), rat_int(2)),
            mulv(vec![
                sc("1/4"),
                addv(vec![
                    mulv(vec![sc("3"), eta(&[("2", 1), ("1", -1)])]),
                    eta(&[("1", 3), ("2", -1)]),
                ]),
            ]),
            t25.clone(),
        )
        .with_tags(&["dual-exp-1"])
        .with_note("constant offset taken as zero; weights 0 and 1 mix"),
    );
    push(
        IdentityRecord::new(
            "dual-exp-2",
            Expr::rescale(nahm4(coupled4_inv(), &["1", "3/2", "3/2", "2"]), rat_int(2)),
            mulv(vec![
                sc("1/4"),
                Expr::qpow(rat_int(-1)),
                addv(vec![
                    eta(&[("2", 1), ("1", -1)]),
                    Expr::neg(eta(&[("1", 3), ("2", -1)])),
                ]),
            ]),
            t25.clone(),
        )
        .with_tags(&["dual-exp-2"])
        .with_note("the source statement repeats the first shift vector; the second is intended"),
    );

    // --- the dual pair that stays non-modular ------------------------------
    let r_sum = Expr::Sum(
        SumSpec::new(
            rows(&[&["6", "4", "8"], &["4", "8", "8"], &["8", "8", "16"]]),
            vecr(&["-4", "-4", "-6"]),
            Rat::zero(),
        )
        .with_denom(step_factor("2", 0, 1, 0, 3))
        .with_denom(step_factor("4", 0, 1, 1, 3))
        .with_denom(step_factor("4", 0, 1, 2, 3)),
    );
    push(
        IdentityRecord::new(
            "false-dual",
            Expr::rescale(
                nahm4(coupled4_inv(), &["-5/4", "-3/4", "-1", "-3/2"]),
                rat_int(4),
            ),
            r_sum.clone(),
            rat_int(24),
        )
        .with_tags(&["false-dual"]),
    );
    push(
        IdentityRecord::new(
            "r-exp",
            r_sum,
            mulv(vec![
                addv(vec![sc("1"), Expr::qpow(rat_int(-1))]),
                pinf("-1", "1", "2"),
            ]),
            t25.clone(),
        )
        .with_tags(&["R-exp"]),
    );
    push(
        IdentityRecord::new(
            "quad-b0-closed",
            Expr::rescale(nahm4(coupled4(), &["-1/2", "0", "-1/4", "0"]), rat_int(4)),
            mulv(vec![
                sc("4"),
                addv(vec![sc("1"), Expr::qpow(rat_int(-1))]),
                pinf("1", "4", "4"),
                Expr::inv(pinf("1", "1", "1")),
            ]),
            rat_int(24),
        )
        .with_tags(&["122-f", "thm-ref"])
        .with_note("the half-lattice evaluation pushed through the rank-four form"),
    );

    // --- two-variable binomial expansion ------------------------------------
    push(
        IdentityRecord::new(
            "cao-wang-half",
            Expr::Sum(
                SumSpec::new(
                    rows(&[&["2", "2"], &["2", "4"]]),
                    vecr(&["-3/2", "-2"]),
                    Rat::zero(),
                )
                .with_denom(step_factor("1", 0, 1, 0, 2))
                .with_denom(step_factor("2", 0, 1, 1, 2)),
            ),
            pinf("-1", "-1/2", "1"),
            t25.clone(),
        )
        .with_tags(&["eq-Cao-Wang"])
        .with_note("u = q^{-1/2}"),
    );
    push(
        IdentityRecord::new(
            "cao-wang-q",
            Expr::Sum(
                SumSpec::new(rows(&[&["2", "2"], &["2", "4"]]), vecr(&["0", "1"]), Rat::zero())
                    .with_denom(step_factor("1", 0, 1, 0, 2))
                    .with_denom(step_factor("2", 0, 1, 1, 2)),
            ),
            pinf("-1", "1", "1"),
            t25.clone(),
        )
        .with_tags(&["eq-Cao-Wang"])
        .with_note("u = q"),
    );

    // --- the shift-vector discrepancy probe ---------------------------------
    push(
        IdentityRecord::new(
            "dual-b0-probe",
            Expr::Nahm {
                spec: ModularQuadruple::new(
                    rows(&[&["1", "-1/2", "0"], &["-1/2", "1", "-1"], &["0", "-1/2", "1"]]),
                    vecr(&["-1/2", "0", "-1/2"]),
                    rat(1, 16),
                    vec![2, 2, 1],
                ),
                monomials: None,
            },
            Expr::Nahm {
                spec: ModularQuadruple::new(
                    rows(&[&["1", "-1/2", "0"], &["-1/2", "1", "-1"], &["0", "-1/2", "1"]]),
                    vecr(&["1/2", "0", "-1/2"]),
                    rat(1, 16),
                    vec![2, 2, 1],
                ),
                monomials: None,
            },
            t25.clone(),
        )
        .expected_to_fail(
            "the displayed dual shift vector starts with -1/2, but the dual transform of \
             (0,-1,-1) computes +1/2; the two expansions genuinely differ",
        )
        .with_tags(&["exam-data", "probe"]),
    );

    out
}

// ---------------------------------------------------------------------------
// Wire format
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct RecordWire {
    name: String,
    lhs: Expr,
    rhs: Expr,
    order: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    tags: Vec<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    expect_fail: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    note: String,
}

/// Serializes a catalog as a JSON array of records.
pub fn catalog_to_json(records: &[IdentityRecord]) -> String {
    let wires: Vec<RecordWire> = records
        .iter()
        .map(|r| RecordWire {
            name: r.name.clone(),
            lhs: r.lhs.clone(),
            rhs: r.rhs.clone(),
            order: fmt_rat(&r.order),
            tags: r.tags.clone(),
            expect_fail: r.expect_fail,
            note: r.note.clone(),
        })
        .collect();
    serde_json::to_string_pretty(&wires).expect("catalog serialization cannot fail")
}

/// Parses a catalog from its JSON form.
pub fn catalog_from_json(s: &str) -> Result<Vec<IdentityRecord>, QError> {
    let wires: Vec<RecordWire> =
        serde_json::from_str(s).map_err(|e| QError::parse(format!("catalog JSON: {e}")))?;
    wires
        .into_iter()
        .map(|w| {
            Ok(IdentityRecord {
                name: w.name,
                lhs: w.lhs,
                rhs: w.rhs,
                order: parse_rat(&w.order)?,
                tags: w.tags,
                expect_fail: w.expect_fail,
                note: w.note,
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_catalog_is_green() {
        let summary = run_catalog(&builtin_catalog(), None, None);
        for row in &summary.results {
            assert!(
                row.outcome.is_green(),
                "record '{}' not green: {:?}",
                row.name,
                row.outcome
            );
        }
        // The probe must fail in the expected way, not pass.
        let probe = summary
            .results
            .iter()
            .find(|r| r.name == "dual-b0-probe")
            .unwrap();
        assert!(matches!(probe.outcome, RecordOutcome::ExpectedFail { .. }));
    }

    #[test]
    fn known_series_prefixes() {
        let catalog = builtin_catalog();
        let rec = catalog.iter().find(|r| r.name == "thm-id-2").unwrap();
        let lhs = eval_expr(&rec.lhs, &rat_int(3)).unwrap();
        assert_eq!(
            lhs.truncated(&rat_int(3)).to_string(),
            "1 + 3q + 6q^2 + 13q^3"
        );

        let rec0 = catalog.iter().find(|r| r.name == "thm-id-0").unwrap();
        let lhs0 = eval_expr(&rec0.lhs, &rat_int(2)).unwrap();
        let (lead, coeff) = lhs0.leading().unwrap();
        assert_eq!(lead, rat(-1, 2));
        assert_eq!(coeff, &rat_int(4));
        assert_eq!(lhs0.coeff(&Rat::zero()).unwrap(), rat_int(8));
    }

    #[test]
    fn corrupted_right_side_reports_second_exponent() {
        let catalog = builtin_catalog();
        let mut rec = catalog
            .iter()
            .find(|r| r.name == "thm-id-2")
            .unwrap()
            .clone();
        rec.rhs = Expr::Mul(vec![
            rec.rhs,
            Expr::Add(vec![Expr::scalar(1), Expr::qpow(Rat::one())]),
        ]);
        rec.order = rat_int(10);
        let report = verify_identity(&rec).unwrap();
        match report.comparison {
            Comparison::Differs { exponent, .. } => assert_eq!(exponent, Rat::one()),
            Comparison::Equal => panic!("corrupted record passed"),
        }
    }

    #[test]
    fn filter_and_override() {
        let catalog = builtin_catalog();
        let summary = run_catalog(&catalog, Some(&rat_int(8)), Some("thm-id"));
        assert_eq!(summary.results.len(), 3);
        assert!(summary.all_green());

        let empty = run_catalog(&[], None, None);
        assert_eq!(empty.results.len(), 0);
        assert!(empty.all_green());
    }

    #[test]
    fn unexpected_pass_is_failure() {
        let catalog = builtin_catalog();
        let mut rec = catalog
            .iter()
            .find(|r| r.name == "rr-1")
            .unwrap()
            .clone();
        rec.expect_fail = true;
        let summary = run_catalog(&[rec], Some(&rat_int(10)), None);
        assert!(matches!(
            summary.results[0].outcome,
            RecordOutcome::UnexpectedPass
        ));
        assert!(!summary.all_green());
    }

    #[test]
    fn q_gauss_examples() {
        let t = rat_int(20);
        assert!(q_gauss_check(&Rat::one(), &rat_int(2), &rat_int(5), &t)
            .unwrap()
            .is_equal());
        assert!(q_gauss_check(&rat(1, 2), &Rat::one(), &rat_int(3), &t)
            .unwrap()
            .is_equal());
        // c = ab makes the argument q^0: divergent geometric case.
        assert!(matches!(
            q_gauss_check(&rat_int(2), &rat_int(3), &rat_int(5), &t),
            Err(QError::BadSpecialization { .. })
        ));
        // Nonpositive integer c kills (c;q)_n.
        assert!(matches!(
            q_gauss_check(&rat_int(-3), &rat_int(-2), &rat_int(0), &t),
            Err(QError::VanishingFactor { .. })
        ));
    }

    #[test]
    fn catalog_json_round_trip() {
        let catalog = builtin_catalog();
        let json = catalog_to_json(&catalog);
        let back = catalog_from_json(&json).unwrap();
        assert_eq!(back.len(), catalog.len());
        for (a, b) in catalog.iter().zip(&back) {
            assert_eq!(a.name, b.name);
            assert_eq!(a.lhs, b.lhs);
            assert_eq!(a.rhs, b.rhs);
            assert_eq!(a.order, b.order);
            assert_eq!(a.expect_fail, b.expect_fail);
        }
        assert!(catalog_from_json("[{\"name\":3}]").is_err());
    }
}
