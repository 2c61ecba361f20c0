//! Declarative q-series expressions.
//!
//! An `Expr` is a closed description of a series: scalars, q-powers,
//! Pochhammer symbols, theta and eta products, multi-sum references, and
//! bounded quadratic sums, combined with ring operations.  `eval_expr`
//! turns one into a truncated series, re-evaluating at a padded order when
//! intermediate factors with negative leading exponents cost certified
//! precision.
//!
//! `SumSpec` covers single to triple sums whose exponent is a positive
//! definite quadratic in the summation indices and whose Pochhammer
//! factors have lengths affine in the indices; that shape guarantees only
//! finitely many lattice points reach any truncation order.

use std::collections::HashMap;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::QError;
use crate::matrix::{check_symmetric, dot, ldl_posdef, solve};
use crate::nahm::{gnahm_expand, ModularQuadruple, MonomialVector};
use crate::products::{eta_expand, poch, theta_phi, theta_psi, EtaQuotient, PochLen, PochSpec};
use crate::rat::{fmt_rat, parse_rat, rat_ceil, rat_floor, rat_int, rat_pow, Rat};
use crate::series::QExp;

// ---------------------------------------------------------------------------
// Bounded quadratic sums
// ---------------------------------------------------------------------------

/// Length of a factor inside a `SumSpec`: affine in the summation indices
/// or infinite.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FactorLen {
    Affine { base: i64, coefs: Vec<i64> },
    Infinite,
}

impl FactorLen {
    /// Constant length.
    pub fn fixed(n: i64) -> Self {
        FactorLen::Affine {
            base: n,
            coefs: Vec::new(),
        }
    }

    /// Length linear in one index: `base + coef * n_index`.
    pub fn linear(base: i64, coef: i64, index: usize, rank: usize) -> Self {
        let mut coefs = vec![0; rank];
        coefs[index] = coef;
        FactorLen::Affine { base, coefs }
    }

    fn resolve(&self, n: &[i64]) -> Option<i64> {
        match self {
            FactorLen::Infinite => None,
            FactorLen::Affine { base, coefs } => {
                let mut len = *base;
                for (c, v) in coefs.iter().zip(n) {
                    len += c * v;
                }
                Some(len)
            }
        }
    }

    fn is_constant(&self) -> bool {
        match self {
            FactorLen::Infinite => true,
            FactorLen::Affine { coefs, .. } => coefs.iter().all(|c| *c == 0),
        }
    }
}

/// One Pochhammer factor `(coeff * q^{arg_exp}; q^{step})_{len}` occurring
/// inside a sum.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SumFactor {
    pub coeff: Rat,
    pub arg_exp: Rat,
    pub step: Rat,
    pub len: FactorLen,
}

impl SumFactor {
    pub fn new(coeff: Rat, arg_exp: Rat, step: Rat, len: FactorLen) -> Self {
        SumFactor {
            coeff,
            arg_exp,
            step,
            len,
        }
    }

    fn spec_at(&self, len: PochLen) -> PochSpec {
        PochSpec::new(self.coeff.clone(), self.arg_exp.clone(), self.step.clone(), len)
    }
}

/// A sum over lattice points `n >= 0` of rank 1 to 3:
///
/// `sum_n (c0 + cl.n) * prod_i g_i^{n_i} * q^{n'Sn/2 + b.n + c}
///        * prod(numer) / prod(denom)`.
///
/// `S` must be symmetric positive definite, which bounds the enumeration.
#[derive(Clone, Debug, PartialEq)]
pub struct SumSpec {
    pub quad: Vec<Vec<Rat>>,
    pub linear: Vec<Rat>,
    pub constant: Rat,
    pub coeff_const: Rat,
    pub coeff_linear: Vec<Rat>,
    pub geo: Vec<Rat>,
    pub numer: Vec<SumFactor>,
    pub denom: Vec<SumFactor>,
}

impl SumSpec {
    /// A bare sum `sum q^{n'Sn/2 + b.n + c}` with unit coefficients and no
    /// factors.
    pub fn new(quad: Vec<Vec<Rat>>, linear: Vec<Rat>, constant: Rat) -> Self {
        let r = linear.len();
        SumSpec {
            quad,
            linear,
            constant,
            coeff_const: Rat::one(),
            coeff_linear: vec![Rat::zero(); r],
            geo: vec![Rat::one(); r],
            numer: Vec::new(),
            denom: Vec::new(),
        }
    }

    pub fn with_coeff(mut self, constant: Rat, linear: Vec<Rat>) -> Self {
        self.coeff_const = constant;
        self.coeff_linear = linear;
        self
    }

    pub fn with_geo(mut self, geo: Vec<Rat>) -> Self {
        self.geo = geo;
        self
    }

    pub fn with_numer(mut self, f: SumFactor) -> Self {
        self.numer.push(f);
        self
    }

    pub fn with_denom(mut self, f: SumFactor) -> Self {
        self.denom.push(f);
        self
    }

    fn rank(&self) -> usize {
        self.linear.len()
    }

    fn validate(&self) -> Result<usize, QError> {
        let r = self.rank();
        if r == 0 || r > 3 {
            return Err(QError::Dimension {
                context: format!("sum rank {r} outside 1..=3"),
            });
        }
        if self.quad.len() != r
            || self.quad.iter().any(|row| row.len() != r)
            || self.coeff_linear.len() != r
            || self.geo.len() != r
        {
            return Err(QError::Dimension {
                context: "sum field lengths disagree with rank".into(),
            });
        }
        check_symmetric(&self.quad)?;
        for f in self.numer.iter().chain(&self.denom) {
            if let FactorLen::Affine { coefs, .. } = &f.len {
                if coefs.len() != r {
                    return Err(QError::Dimension {
                        context: "factor length coefficients disagree with rank".into(),
                    });
                }
            }
            // Factors with negative argument exponents contribute a fixed,
            // precomputable exponent deficit only when their length does
            // not vary with the indices.
            if f.arg_exp.is_negative() && !f.len.is_constant() {
                return Err(QError::BadSpecialization {
                    reason: "index-dependent factor with negative argument exponent".into(),
                });
            }
        }
        Ok(r)
    }
}

/// Expands a `SumSpec` to order `t`: exact enumeration of every lattice
/// point whose term can reach the truncation window.
///
/// The quadratic part must be positive definite, with one extension: a
/// rank-one sum with zero quadratic part and positive slope still has
/// exponents marching to infinity, so it is enumerated directly.
pub fn eval_sum(s: &SumSpec, t: &Rat) -> Result<QExp, QError> {
    let r = s.validate()?;
    let zero_quad = r == 1 && s.quad[0][0].is_zero();

    // Fixed deficit from constant-length factors with negative arguments.
    let mut global_mass = Rat::zero();
    for f in s.numer.iter().chain(&s.denom) {
        if f.len.is_constant() {
            let len = match f.len {
                FactorLen::Infinite => PochLen::Infinite,
                FactorLen::Affine { base, .. } => {
                    PochLen::Finite(u32::try_from(base.max(0)).unwrap_or(0))
                }
            };
            global_mass += f.spec_at(len).negative_mass();
        }
    }

    // Analytic minimum of the exponent over real n >= 0.
    let (l, piv, center, base_min) = if zero_quad {
        if !s.linear[0].is_positive() {
            return Err(QError::NonTruncating {
                reason: "flat sum with nonpositive exponent slope".into(),
            });
        }
        (Vec::new(), Vec::new(), Vec::new(), s.constant.clone())
    } else {
        let (l, piv) = ldl_posdef(&s.quad)?;
        let mu = solve(&s.quad, &s.linear)?;
        let base_min = &s.constant - dot(&s.linear, &mu) / rat_int(2);
        let center: Vec<Rat> = mu.iter().map(|m| -m).collect();
        (l, piv, center, base_min)
    };

    let budget = t - &base_min - &global_mass;
    let mut out = QExp::zero().truncated(t);
    if budget.is_negative() {
        return Ok(out);
    }
    // Everything is evaluated at one padded order so cached factor series
    // are shared across lattice points.
    let floor_min = {
        let f = Rat::from(rat_floor(&base_min));
        if f.is_positive() {
            Rat::zero()
        } else {
            f
        }
    };
    let t_base = t - &floor_min - &global_mass;

    let mut walker = SumWalker {
        spec: s,
        l: &l,
        piv: &piv,
        center,
        t: t.clone(),
        limit: t - &global_mass,
        t_base,
        base_min,
        n: vec![0; r],
        numer_cache: HashMap::new(),
        denom_cache: HashMap::new(),
        acc: &mut out,
    };
    if zero_quad {
        walker.run_flat()?;
    } else {
        walker.level(r, Rat::zero())?;
    }
    Ok(out.truncated(t))
}

struct SumWalker<'a> {
    spec: &'a SumSpec,
    l: &'a [Vec<Rat>],
    piv: &'a [Rat],
    /// Real minimizer of the exponent, -S^{-1}b.
    center: Vec<Rat>,
    t: Rat,
    /// Enumeration ceiling: `t` widened by the fixed factor deficit.
    limit: Rat,
    t_base: Rat,
    base_min: Rat,
    n: Vec<i64>,
    numer_cache: HashMap<(usize, u32), QExp>,
    denom_cache: HashMap<(usize, u32), QExp>,
    acc: &'a mut QExp,
}

impl SumWalker<'_> {
    /// Chooses `n[k-1]` given fixed `n[k..]`; `spent` is the quadratic cost
    /// of the fixed suffix.  Levels run from the last index down to the
    /// first, matching the lower-triangular factor.
    fn level(&mut self, k: usize, spent: Rat) -> Result<(), QError> {
        if k == 0 {
            return self.emit(spent);
        }
        let k = k - 1;
        let budget = &self.limit - &self.base_min - spent.clone();
        // v_k = (n_k - center_k) + sum_{j>k} L[j][k] (n_j - center_j).
        let mut c_k = -self.center[k].clone();
        for j in (k + 1)..self.spec.rank() {
            c_k += &self.l[j][k] * (rat_int(self.n[j]) - &self.center[j]);
        }
        let piv_k = self.piv[k].clone();
        let cost = |v: i64| -> Rat {
            let w = rat_int(v) + &c_k;
            &piv_k * &w * &w / rat_int(2)
        };
        let start = {
            let lo = rat_ceil(&(-&c_k));
            let lo = i64::try_from(lo).map_err(|_| QError::Dimension {
                context: "sum index out of machine range".into(),
            })?;
            lo.max(0)
        };
        let mut v = start;
        while cost(v) <= budget {
            self.n[k] = v;
            self.level(k, &spent + cost(v))?;
            v += 1;
        }
        v = start - 1;
        while v >= 0 && cost(v) <= budget {
            self.n[k] = v;
            self.level(k, &spent + cost(v))?;
            v -= 1;
        }
        Ok(())
    }

    /// Enumerates the rank-one zero-quadratic case: exponent `c + b n`
    /// with `b > 0`.
    fn run_flat(&mut self) -> Result<(), QError> {
        let slope = self.spec.linear[0].clone();
        let mut n: i64 = 0;
        loop {
            let spent = &slope * rat_int(n);
            if &self.base_min + &spent > self.limit {
                return Ok(());
            }
            self.n[0] = n;
            self.emit(spent)?;
            n += 1;
        }
    }

    fn emit(&mut self, spent: Rat) -> Result<(), QError> {
        let s = self.spec;
        let e = &self.base_min + spent;
        // Scalar coefficient: affine part times geometric part.
        let mut coeff = s.coeff_const.clone();
        for (c, v) in s.coeff_linear.iter().zip(&self.n) {
            coeff += c * rat_int(*v);
        }
        for (g, v) in s.geo.iter().zip(&self.n) {
            if !g.is_one() {
                coeff *= rat_pow(g, *v);
            }
        }
        if coeff.is_zero() {
            return Ok(());
        }

        let mut term = QExp::monomial(coeff, e);
        for (idx, f) in s.numer.iter().enumerate() {
            let series =
                factor_series(&mut self.numer_cache, &self.t_base, idx, f, &self.n, false)?;
            term = term.mul(&series);
        }
        for (idx, f) in s.denom.iter().enumerate() {
            let series =
                factor_series(&mut self.denom_cache, &self.t_base, idx, f, &self.n, true)?;
            term = term.mul(&series);
        }
        let next = self.acc.add(&term.truncated(&self.t));
        *self.acc = next;
        Ok(())
    }
}

fn factor_series(
    cache: &mut HashMap<(usize, u32), QExp>,
    t_base: &Rat,
    idx: usize,
    f: &SumFactor,
    n: &[i64],
    inverted: bool,
) -> Result<QExp, QError> {
    let (key_len, len) = match f.len.resolve(n) {
        None => (u32::MAX, PochLen::Infinite),
        Some(v) => {
            let v = u32::try_from(v).map_err(|_| QError::NegativeLength {
                index: format!("factor {idx} at point {n:?}"),
                value: v,
            })?;
            (v, PochLen::Finite(v))
        }
    };
    if let Some(hit) = cache.get(&(idx, key_len)) {
        return Ok(hit.clone());
    }
    let series = poch(&f.spec_at(len), t_base)?;
    let series = if inverted {
        if series.is_zero() {
            return Err(QError::VanishingFactor {
                factor: format!(
                    "({}q^{}; q^{})_{}",
                    fmt_rat(&f.coeff),
                    fmt_rat(&f.arg_exp),
                    fmt_rat(&f.step),
                    key_len
                ),
            });
        }
        series.invert(t_base)?
    } else {
        series
    };
    cache.insert((idx, key_len), series.clone());
    Ok(series)
}

// ---------------------------------------------------------------------------
// Expression AST
// ---------------------------------------------------------------------------

/// Theta function selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThetaKind {
    Phi,
    Psi,
}

/// A closed q-series expression.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    /// A constant.
    Scalar(Rat),
    /// `q^e`.
    QPow(Rat),
    /// A Pochhammer symbol.
    Poch(PochSpec),
    /// A multi-sum expansion, optionally under a monomial specialization.
    Nahm {
        spec: ModularQuadruple,
        monomials: Option<MonomialVector>,
    },
    /// A bounded quadratic sum.
    Sum(SumSpec),
    /// Product of subexpressions (empty product is 1).
    Mul(Vec<Expr>),
    /// Sum of subexpressions (empty sum is 0).
    Add(Vec<Expr>),
    Neg(Box<Expr>),
    Inv(Box<Expr>),
    /// `q -> q^s` on the subexpression, `s > 0`.
    Rescale(Box<Expr>, Rat),
    Theta {
        kind: ThetaKind,
        negate: bool,
    },
    Eta(EtaQuotient),
}

/// Evaluates an expression to at least order `t`.
///
/// A single pass evaluates leaves at `t`; when a product or inverse with
/// negative leading exponents certifies less than `t`, the pass is retried
/// at a padded order.  Expressions whose deficit grows without bound
/// (there are none expressible here) would exhaust the retry budget.
pub fn eval_expr(e: &Expr, t: &Rat) -> Result<QExp, QError> {
    let mut t_eval = t.clone();
    for _ in 0..6 {
        let s = eval_at(e, &t_eval)?;
        match s.order() {
            crate::series::Horizon::Infinite => return Ok(s),
            crate::series::Horizon::Finite(h) if h >= t => return Ok(s),
            crate::series::Horizon::Finite(h) => {
                t_eval += t - h;
            }
        }
    }
    Err(QError::NonTruncating {
        reason: "expression keeps losing certified order under padding".into(),
    })
}

fn eval_at(e: &Expr, t: &Rat) -> Result<QExp, QError> {
    match e {
        Expr::Scalar(c) => Ok(QExp::monomial(c.clone(), Rat::zero())),
        Expr::QPow(exp) => Ok(QExp::monomial(Rat::one(), exp.clone())),
        Expr::Poch(spec) => poch(spec, t),
        Expr::Nahm { spec, monomials } => {
            let (s, _) = gnahm_expand(spec, monomials.as_ref(), t)?;
            Ok(s)
        }
        Expr::Sum(s) => eval_sum(s, t),
        Expr::Mul(parts) => {
            let mut out = QExp::one();
            for p in parts {
                out = out.mul(&eval_at(p, t)?);
            }
            Ok(out)
        }
        Expr::Add(parts) => {
            let mut out = QExp::zero().truncated(t);
            for p in parts {
                out = out.add(&eval_at(p, t)?);
            }
            Ok(out)
        }
        Expr::Neg(inner) => Ok(eval_at(inner, t)?.mul_monomial(&-Rat::one(), &Rat::zero())),
        Expr::Inv(inner) => eval_at(inner, t)?.invert(t),
        Expr::Rescale(inner, s) => {
            if !s.is_positive() {
                return Err(QError::BadExpArgument {
                    found: format!("rescale by {}", fmt_rat(s)),
                });
            }
            eval_at(inner, &(t / s))?.rescale(s)
        }
        Expr::Theta { kind, negate } => {
            let base = match kind {
                ThetaKind::Phi => theta_phi(t),
                ThetaKind::Psi => theta_psi(t),
            };
            if *negate {
                base.negate_q()
            } else {
                Ok(base)
            }
        }
        Expr::Eta(q) => eta_expand(q, t),
    }
}

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

impl Expr {
    pub fn scalar(v: i64) -> Self {
        Expr::Scalar(rat_int(v))
    }

    pub fn qpow(e: Rat) -> Self {
        Expr::QPow(e)
    }

    /// `(coeff q^{arg}; q^{step})_inf`.
    pub fn poch_inf(coeff: Rat, arg: Rat, step: Rat) -> Self {
        Expr::Poch(PochSpec::new(coeff, arg, step, PochLen::Infinite))
    }

    /// A quotient of infinite products `prod_m (q^m;q^m)_inf^{e_m}`.
    pub fn eta(exps: &[(Rat, i64)]) -> Self {
        Expr::Eta(
            EtaQuotient::new(Rat::one(), Rat::zero(), exps.iter().cloned())
                .expect("static eta exponents"),
        )
    }

    pub fn neg(e: Expr) -> Self {
        Expr::Neg(Box::new(e))
    }

    pub fn inv(e: Expr) -> Self {
        Expr::Inv(Box::new(e))
    }

    pub fn rescale(e: Expr, s: Rat) -> Self {
        Expr::Rescale(Box::new(e), s)
    }
}

// ---------------------------------------------------------------------------
// Wire format
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum LenWire {
    Infinite(String),
    Affine { base: i64, coefs: Vec<i64> },
}

#[derive(Serialize, Deserialize)]
struct FactorWire {
    coeff: String,
    arg_exp: String,
    step: String,
    len: LenWire,
}

#[derive(Serialize, Deserialize)]
struct SumWire {
    quad: Vec<Vec<String>>,
    linear: Vec<String>,
    constant: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    coeff: Option<(String, Vec<String>)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    geo: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    numer: Vec<FactorWire>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    denom: Vec<FactorWire>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ExprWire {
    Scalar {
        value: String,
    },
    QPow {
        exp: String,
    },
    Poch {
        coeff: String,
        arg_exp: String,
        step: String,
        len: LenWire,
    },
    Nahm {
        spec: ModularQuadruple,
        #[serde(skip_serializing_if = "Option::is_none")]
        monomials: Option<MonomialVector>,
    },
    Sum(SumWire),
    Mul {
        parts: Vec<ExprWire>,
    },
    Add {
        parts: Vec<ExprWire>,
    },
    Neg {
        inner: Box<ExprWire>,
    },
    Inv {
        inner: Box<ExprWire>,
    },
    Rescale {
        inner: Box<ExprWire>,
        scale: String,
    },
    Theta {
        form: String,
        #[serde(default)]
        negate: bool,
    },
    Eta {
        quotient: EtaQuotient,
    },
}

fn len_to_wire(len: &FactorLen) -> LenWire {
    match len {
        FactorLen::Infinite => LenWire::Infinite("inf".into()),
        FactorLen::Affine { base, coefs } => LenWire::Affine {
            base: *base,
            coefs: coefs.clone(),
        },
    }
}

fn len_from_wire(w: &LenWire) -> Result<FactorLen, QError> {
    match w {
        LenWire::Infinite(s) if s == "inf" => Ok(FactorLen::Infinite),
        LenWire::Infinite(s) => Err(QError::parse(format!("bad factor length '{s}'"))),
        LenWire::Affine { base, coefs } => Ok(FactorLen::Affine {
            base: *base,
            coefs: coefs.clone(),
        }),
    }
}

fn factor_to_wire(f: &SumFactor) -> FactorWire {
    FactorWire {
        coeff: fmt_rat(&f.coeff),
        arg_exp: fmt_rat(&f.arg_exp),
        step: fmt_rat(&f.step),
        len: len_to_wire(&f.len),
    }
}

fn factor_from_wire(w: &FactorWire) -> Result<SumFactor, QError> {
    Ok(SumFactor {
        coeff: parse_rat(&w.coeff)?,
        arg_exp: parse_rat(&w.arg_exp)?,
        step: parse_rat(&w.step)?,
        len: len_from_wire(&w.len)?,
    })
}

fn rats_to_wire(v: &[Rat]) -> Vec<String> {
    v.iter().map(fmt_rat).collect()
}

fn rats_from_wire(v: &[String]) -> Result<Vec<Rat>, QError> {
    v.iter().map(|s| parse_rat(s)).collect()
}

fn expr_to_wire(e: &Expr) -> ExprWire {
    match e {
        Expr::Scalar(v) => ExprWire::Scalar { value: fmt_rat(v) },
        Expr::QPow(exp) => ExprWire::QPow { exp: fmt_rat(exp) },
        Expr::Poch(p) => ExprWire::Poch {
            coeff: fmt_rat(&p.coeff),
            arg_exp: fmt_rat(&p.arg_exp),
            step: fmt_rat(&p.step),
            len: match p.len {
                PochLen::Infinite => LenWire::Infinite("inf".into()),
                PochLen::Finite(n) => LenWire::Affine {
                    base: n as i64,
                    coefs: Vec::new(),
                },
            },
        },
        Expr::Nahm { spec, monomials } => ExprWire::Nahm {
            spec: spec.clone(),
            monomials: monomials.clone(),
        },
        Expr::Sum(s) => ExprWire::Sum(SumWire {
            quad: s.quad.iter().map(|row| rats_to_wire(row)).collect(),
            linear: rats_to_wire(&s.linear),
            constant: fmt_rat(&s.constant),
            coeff: if s.coeff_const.is_one() && s.coeff_linear.iter().all(|c| c.is_zero()) {
                None
            } else {
                Some((fmt_rat(&s.coeff_const), rats_to_wire(&s.coeff_linear)))
            },
            geo: if s.geo.iter().all(|g| g.is_one()) {
                None
            } else {
                Some(rats_to_wire(&s.geo))
            },
            numer: s.numer.iter().map(factor_to_wire).collect(),
            denom: s.denom.iter().map(factor_to_wire).collect(),
        }),
        Expr::Mul(parts) => ExprWire::Mul {
            parts: parts.iter().map(expr_to_wire).collect(),
        },
        Expr::Add(parts) => ExprWire::Add {
            parts: parts.iter().map(expr_to_wire).collect(),
        },
        Expr::Neg(inner) => ExprWire::Neg {
            inner: Box::new(expr_to_wire(inner)),
        },
        Expr::Inv(inner) => ExprWire::Inv {
            inner: Box::new(expr_to_wire(inner)),
        },
        Expr::Rescale(inner, s) => ExprWire::Rescale {
            inner: Box::new(expr_to_wire(inner)),
            scale: fmt_rat(s),
        },
        Expr::Theta { kind, negate } => ExprWire::Theta {
            form: match kind {
                ThetaKind::Phi => "phi".into(),
                ThetaKind::Psi => "psi".into(),
            },
            negate: *negate,
        },
        Expr::Eta(q) => ExprWire::Eta {
            quotient: q.clone(),
        },
    }
}

fn expr_from_wire(w: &ExprWire) -> Result<Expr, QError> {
    Ok(match w {
        ExprWire::Scalar { value } => Expr::Scalar(parse_rat(value)?),
        ExprWire::QPow { exp } => Expr::QPow(parse_rat(exp)?),
        ExprWire::Poch {
            coeff,
            arg_exp,
            step,
            len,
        } => {
            let len = match len_from_wire(len)? {
                FactorLen::Infinite => PochLen::Infinite,
                FactorLen::Affine { base, coefs } if coefs.iter().all(|c| *c == 0) => {
                    PochLen::Finite(u32::try_from(base).map_err(|_| QError::NegativeLength {
                        index: "standalone product".into(),
                        value: base,
                    })?)
                }
                _ => {
                    return Err(QError::parse(
                        "standalone product length must be constant",
                    ))
                }
            };
            Expr::Poch(PochSpec::new(
                parse_rat(coeff)?,
                parse_rat(arg_exp)?,
                parse_rat(step)?,
                len,
            ))
        }
        ExprWire::Nahm { spec, monomials } => Expr::Nahm {
            spec: spec.clone(),
            monomials: monomials.clone(),
        },
        ExprWire::Sum(s) => {
            let linear = rats_from_wire(&s.linear)?;
            let r = linear.len();
            let quad = s
                .quad
                .iter()
                .map(|row| rats_from_wire(row))
                .collect::<Result<Vec<_>, _>>()?;
            let mut out = SumSpec::new(quad, linear, parse_rat(&s.constant)?);
            if let Some((c0, cl)) = &s.coeff {
                out = out.with_coeff(parse_rat(c0)?, rats_from_wire(cl)?);
            }
            if let Some(g) = &s.geo {
                out = out.with_geo(rats_from_wire(g)?);
            } else {
                out.geo = vec![Rat::one(); r];
            }
            for f in &s.numer {
                out = out.with_numer(factor_from_wire(f)?);
            }
            for f in &s.denom {
                out = out.with_denom(factor_from_wire(f)?);
            }
            Expr::Sum(out)
        }
        ExprWire::Mul { parts } => Expr::Mul(
            parts
                .iter()
                .map(expr_from_wire)
                .collect::<Result<Vec<_>, _>>()?,
        ),
        ExprWire::Add { parts } => Expr::Add(
            parts
                .iter()
                .map(expr_from_wire)
                .collect::<Result<Vec<_>, _>>()?,
        ),
        ExprWire::Neg { inner } => Expr::Neg(Box::new(expr_from_wire(inner)?)),
        ExprWire::Inv { inner } => Expr::Inv(Box::new(expr_from_wire(inner)?)),
        ExprWire::Rescale { inner, scale } => {
            Expr::Rescale(Box::new(expr_from_wire(inner)?), parse_rat(scale)?)
        }
        ExprWire::Theta { form, negate } => Expr::Theta {
            kind: match form.as_str() {
                "phi" => ThetaKind::Phi,
                "psi" => ThetaKind::Psi,
                other => return Err(QError::parse(format!("unknown theta form '{other}'"))),
            },
            negate: *negate,
        },
        ExprWire::Eta { quotient } => Expr::Eta(quotient.clone()),
    })
}

impl Serialize for Expr {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        expr_to_wire(self).serialize(ser)
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let w = ExprWire::deserialize(de)?;
        expr_from_wire(&w).map_err(serde::de::Error::custom)
    }
}

impl Expr {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("expression serialization cannot fail")
    }

    pub fn from_json_str(s: &str) -> Result<Self, QError> {
        serde_json::from_str(s).map_err(|e| QError::parse(format!("expression JSON: {e}")))
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
