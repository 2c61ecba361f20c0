//! Multi-dimensional q-hypergeometric sums of Nahm type and their duals.
//!
//! A triple `(A, B, C)` describes `sum_n q^{n'An/2 + n'B + C} / prod (q;q)_{n_i}`
//! over nonnegative integer vectors `n`.  A quadruple `(A, B, C, D)` has
//! per-coordinate bases: the factor for coordinate `i` is
//! `(q^{d_i}; q^{d_i})_{n_i}` and the quadratic form is `n'ADn/2`, which must
//! be symmetric positive definite for the sum to truncate.
//!
//! Expansion enumerates exactly the lattice points whose exponent stays at
//! or below the truncation, by descending through an exact LDL^T
//! factorization of `AD`; no floating point, no safety margins.  The running
//! product of inverse Pochhammer factors is updated incrementally, one
//! binomial per step.

use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::QError;
use crate::matrix::{check_symmetric, dot, invert_mat, ldl_posdef, mat_vec, solve};
use crate::products::{poch, PochLen, PochSpec};
use crate::rat::{fmt_rat, parse_rat, rat, rat_ceil, rat_floor, rat_int, rat_pow, Rat};
use crate::series::{Comparison, Horizon, QExp};

// ---------------------------------------------------------------------------
// Data types
// ---------------------------------------------------------------------------

/// `(A, B, C)` with a symmetric rational matrix `A`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModularTriple {
    pub a: Vec<Vec<Rat>>,
    pub b: Vec<Rat>,
    pub c: Rat,
}

/// `(A, B, C, D)` with positive integer base multipliers `D`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModularQuadruple {
    pub a: Vec<Vec<Rat>>,
    pub b: Vec<Rat>,
    pub c: Rat,
    pub d: Vec<i64>,
}

/// Per-coordinate monomial specialization: coordinate `i` contributes an
/// extra factor `coeff_i^{n_i} * q^{exp_i * n_i}` to each summand.
#[derive(Clone, Debug, PartialEq)]
pub struct MonomialVector {
    pub entries: Vec<(Rat, Rat)>,
}

/// Bookkeeping from an expansion run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExpandStats {
    /// Lattice points whose exponent met the truncation bound.  Zero means
    /// the reported series is empty over the requested range.
    pub points: u64,
}

impl ModularTriple {
    pub fn new(a: Vec<Vec<Rat>>, b: Vec<Rat>, c: Rat) -> Self {
        ModularTriple { a, b, c }
    }

    pub fn rank(&self) -> usize {
        self.a.len()
    }

    /// The same sum as a quadruple with all base multipliers 1.
    pub fn to_quadruple(&self) -> ModularQuadruple {
        ModularQuadruple {
            a: self.a.clone(),
            b: self.b.clone(),
            c: self.c.clone(),
            d: vec![1; self.a.len()],
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("triple serialization cannot fail")
    }

    pub fn from_json_str(s: &str) -> Result<Self, QError> {
        serde_json::from_str(s).map_err(|e| QError::parse(format!("triple JSON: {e}")))
    }
}

impl ModularQuadruple {
    pub fn new(a: Vec<Vec<Rat>>, b: Vec<Rat>, c: Rat, d: Vec<i64>) -> Self {
        ModularQuadruple { a, b, c, d }
    }

    pub fn rank(&self) -> usize {
        self.a.len()
    }

    /// Shape checks: square `A`, matching lengths, positive `D`.
    pub fn validate(&self) -> Result<usize, QError> {
        let r = crate::matrix::check_square(&self.a)?;
        if self.b.len() != r {
            return Err(QError::Dimension {
                context: format!("linear part has length {}, rank is {}", self.b.len(), r),
            });
        }
        if self.d.len() != r {
            return Err(QError::Dimension {
                context: format!("base vector has length {}, rank is {}", self.d.len(), r),
            });
        }
        if let Some(bad) = self.d.iter().find(|&&x| x < 1) {
            return Err(QError::BadSpecialization {
                reason: format!("base multipliers must be positive integers, got {bad}"),
            });
        }
        Ok(r)
    }

    /// The quadratic-form matrix `AD` (column `j` of `A` scaled by `d_j`).
    pub fn s_matrix(&self) -> Vec<Vec<Rat>> {
        self.a
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&self.d)
                    .map(|(x, d)| x * rat_int(*d))
                    .collect()
            })
            .collect()
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("quadruple serialization cannot fail")
    }

    pub fn from_json_str(s: &str) -> Result<Self, QError> {
        serde_json::from_str(s).map_err(|e| QError::parse(format!("quadruple JSON: {e}")))
    }
}

impl MonomialVector {
    pub fn ones(r: usize) -> Self {
        MonomialVector {
            entries: vec![(Rat::one(), Rat::zero()); r],
        }
    }

    /// Exponent shifts only: coefficient 1, `q^{x_i}` per coordinate.
    pub fn powers<I: IntoIterator<Item = Rat>>(exps: I) -> Self {
        MonomialVector {
            entries: exps.into_iter().map(|x| (Rat::one(), x)).collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// Duals
// ---------------------------------------------------------------------------

/// The dual `(A^{-1}, A^{-1}B, B'A^{-1}B/2 - r/24 - C)` of a symmetric
/// invertible triple.
pub fn dual_triple(t: &ModularTriple) -> Result<ModularTriple, QError> {
    let q = dual_quadruple(&t.to_quadruple())?;
    Ok(ModularTriple {
        a: q.a,
        b: q.b,
        c: q.c,
    })
}

/// The dual `(A^{-1}, A^{-1}B, B'(AD)^{-1}B/2 - tr(D)/24 - C, D)` of a
/// quadruple with `AD` symmetric and `A` invertible.
pub fn dual_quadruple(q: &ModularQuadruple) -> Result<ModularQuadruple, QError> {
    q.validate()?;
    let s = q.s_matrix();
    check_symmetric(&s)?;
    let a_inv = invert_mat(&q.a)?;
    let b_star = mat_vec(&a_inv, &q.b);
    let s_inv_b = solve(&s, &q.b)?;
    let tr_d: i64 = q.d.iter().sum();
    let c_star = dot(&q.b, &s_inv_b) / rat_int(2) - rat(tr_d, 24) - &q.c;
    Ok(ModularQuadruple {
        a: a_inv,
        b: b_star,
        c: c_star,
        d: q.d.clone(),
    })
}

// ---------------------------------------------------------------------------
// Expansion
// ---------------------------------------------------------------------------

/// Expands a triple, optionally under a monomial specialization.
pub fn nahm_expand(
    t: &ModularTriple,
    spec: Option<&MonomialVector>,
    order: &Rat,
) -> Result<(QExp, ExpandStats), QError> {
    gnahm_expand(&t.to_quadruple(), spec, order)
}

/// Expands a quadruple, optionally under a monomial specialization.
///
/// Requires `AD` symmetric positive definite.  Every lattice point whose
/// exponent is at most `order` contributes; the result's truncation order
/// is exactly `order`.
pub fn gnahm_expand(
    q: &ModularQuadruple,
    spec: Option<&MonomialVector>,
    order: &Rat,
) -> Result<(QExp, ExpandStats), QError> {
    let r = q.validate()?;
    let s = q.s_matrix();
    let (l, piv) = ldl_posdef(&s)?;

    let mut b_lin = q.b.clone();
    let mut lam = vec![Rat::one(); r];
    if let Some(sp) = spec {
        if sp.entries.len() != r {
            return Err(QError::Dimension {
                context: format!(
                    "specialization has length {}, rank is {}",
                    sp.entries.len(),
                    r
                ),
            });
        }
        for (i, (coeff, exp)) in sp.entries.iter().enumerate() {
            lam[i] = coeff.clone();
            b_lin[i] += exp;
        }
    }

    let mu = solve(&s, &b_lin)?;
    // Exponent of the summand at n: (n+mu)'S(n+mu)/2 + base, with
    // base = C - b'mu/2 the analytic minimum.
    let base = &q.c - dot(&b_lin, &mu) / rat_int(2);
    let budget = order - &base;
    if budget.is_negative() {
        return Ok((QExp::zero().truncated(order), ExpandStats { points: 0 }));
    }

    // Common exponent denominator: quadratic terms contribute 2*den(S),
    // linear terms den(b), plus den(C).
    let mut den: i64 = 1;
    for row in &s {
        for x in row {
            den = den.lcm(&(2 * x.denom().to_i64().expect("matrix denominator range")));
        }
    }
    for x in &b_lin {
        den = den.lcm(&x.denom().to_i64().expect("linear denominator range"));
    }
    den = den.lcm(&q.c.denom().to_i64().expect("constant denominator range"));

    let base_floor = rat_floor(&(&base * rat_int(den)))
        .to_i64()
        .expect("buffer offset range");
    let top = rat_floor(&(order * rat_int(den)))
        .to_i64()
        .expect("buffer top range");
    let slots = usize::try_from(top - base_floor + 1).expect("buffer size range");
    // Inverse-Pochhammer table length: relative exponents up to the budget.
    let w = usize::try_from(rat_floor(&budget).to_i64().expect("table size range") + 1)
        .expect("table size range");

    let mut walker = Walker {
        r,
        l,
        piv,
        mu,
        d: q.d.clone(),
        lam,
        budget,
        base,
        den,
        base_floor,
        buffer: vec![Rat::zero(); slots],
        points: 0,
        n: vec![0; r],
        s: &s,
        b: &b_lin,
        c: &q.c,
    };
    let mut prod0 = vec![Rat::zero(); w];
    if w > 0 {
        prod0[0] = Rat::one();
    }
    walker.level(r as i64 - 1, &prod0, &Rat::zero(), &Rat::one());

    let series = QExp::from_raw(
        den,
        base_floor,
        walker.buffer,
        Horizon::Finite(order.clone()),
    );
    Ok((
        series,
        ExpandStats {
            points: walker.points,
        },
    ))
}

struct Walker<'a> {
    r: usize,
    l: Vec<Vec<Rat>>,
    piv: Vec<Rat>,
    mu: Vec<Rat>,
    d: Vec<i64>,
    lam: Vec<Rat>,
    budget: Rat,
    base: Rat,
    den: i64,
    base_floor: i64,
    buffer: Vec<Rat>,
    points: u64,
    n: Vec<i64>,
    s: &'a [Vec<Rat>],
    b: &'a [Rat],
    c: &'a Rat,
}

/// In place `v *= 1/(1 - q^m)` on a dense integer-exponent table.
fn mul_inv_binomial(v: &mut [Rat], m: i64) {
    let m = m as usize;
    for j in m..v.len() {
        let carry = v[j - m].clone();
        v[j] += carry;
    }
}

/// In place `v *= (1 - q^m)` on a dense integer-exponent table.
fn mul_binomial(v: &mut [Rat], m: i64) {
    let m = m as usize;
    if m > v.len() {
        return;
    }
    for j in (m..v.len()).rev() {
        let carry = v[j - m].clone();
        v[j] -= carry;
    }
}

impl Walker<'_> {
    /// Chooses coordinate `k` given all coordinates above it, scanning
    /// outward in both directions from the real minimizer of the partial
    /// quadratic (which is unimodal in `n_k`).
    fn level(&mut self, k: i64, prod: &[Rat], p_tail: &Rat, coeff: &Rat) {
        if k < 0 {
            self.emit(prod, p_tail, coeff);
            return;
        }
        let k = k as usize;
        let mut ck = self.mu[k].clone();
        for j in (k + 1)..self.r {
            ck += &self.l[j][k] * (rat_int(self.n[j]) + &self.mu[j]);
        }
        let remaining = &self.budget - p_tail;
        let half_piv = &self.piv[k] / rat_int(2);
        let cost = |v: i64| -> Rat {
            let y = rat_int(v) + &ck;
            &half_piv * &y * &y
        };
        let n0 = rat_ceil(&-&ck).to_i64().expect("coordinate range").max(0);

        // Product state for n_k = n0, building on the outer coordinates.
        let mut up = prod.to_vec();
        for j in 1..=n0 {
            mul_inv_binomial(&mut up, self.d[k] * j);
        }
        let down_seed = up.clone();

        let mut v = n0;
        let mut cv = coeff * rat_pow(&self.lam[k], n0);
        loop {
            let step = cost(v);
            if step > remaining {
                break;
            }
            self.n[k] = v;
            let p_here = p_tail + step;
            self.level(k as i64 - 1, &up, &p_here, &cv);
            v += 1;
            mul_inv_binomial(&mut up, self.d[k] * v);
            cv = &cv * &self.lam[k];
        }

        let mut down = down_seed;
        let mut v = n0 - 1;
        while v >= 0 {
            mul_binomial(&mut down, self.d[k] * (v + 1));
            let step = cost(v);
            if step > remaining {
                break;
            }
            self.n[k] = v;
            let p_here = p_tail + step;
            let cv = coeff * rat_pow(&self.lam[k], v);
            self.level(k as i64 - 1, &down, &p_here, &cv);
            v -= 1;
        }
    }

    /// All coordinates chosen: fold `coeff * q^{exponent} * prod` into the
    /// accumulation buffer.
    fn emit(&mut self, prod: &[Rat], p0: &Rat, coeff: &Rat) {
        self.points += 1;
        if coeff.is_zero() {
            return;
        }
        let e = p0 + &self.base;
        debug_assert_eq!(e, self.direct_exponent(), "partial sums drifted");
        let e_num = &e * rat_int(self.den);
        debug_assert!(e_num.is_integer());
        let start = e_num.to_integer().to_i64().expect("exponent range") - self.base_floor;
        for (j, x) in prod.iter().enumerate() {
            let idx = start + (j as i64) * self.den;
            if idx as usize >= self.buffer.len() {
                break;
            }
            if !x.is_zero() {
                self.buffer[idx as usize] += coeff * x;
            }
        }
    }

    fn direct_exponent(&self) -> Rat {
        let nv: Vec<Rat> = self.n.iter().map(|&x| rat_int(x)).collect();
        let sn = mat_vec(self.s, &nv);
        dot(&nv, &sn) / rat_int(2) + dot(&nv, self.b) + self.c
    }
}

// ---------------------------------------------------------------------------
// Splitting check for separable rank-4 sums
// ---------------------------------------------------------------------------

/// For a rank-4 triple whose matrix has a 3x3 identity block and tail
/// entries `-1/2` (so the first three coordinates separate once the tail
/// coordinate is fixed), checks
///
/// `f(q) = sum_{m=0}^{n_max} q^{m^2/2 + b4 m + C}/(q;q)_m *
///  prod_{i<4} (-q^{(1-m)/2 + b_i}; q)_inf`
///
/// against a direct expansion, both truncated at `order`.  Fails when
/// `n_max` is too small for the requested order.
pub fn splitting_check(
    t: &ModularTriple,
    n_max: u32,
    order: &Rat,
) -> Result<Comparison, QError> {
    let r = t.rank();
    if r != 4 || t.b.len() != 4 {
        return Err(QError::Dimension {
            context: format!("splitting needs rank 4, got {r}"),
        });
    }
    let half = rat(-1, 2);
    for i in 0..4 {
        for j in 0..4 {
            let want = match (i == j, i == 3 || j == 3) {
                (true, _) => Rat::one(),
                (false, true) => half.clone(),
                (false, false) => Rat::zero(),
            };
            if t.a[i][j] != want {
                return Err(QError::BadSpecialization {
                    reason: format!(
                        "splitting needs the separable matrix shape, entry ({i},{j}) is {}",
                        fmt_rat(&t.a[i][j])
                    ),
                });
            }
        }
    }

    // Tail terms beyond n_max must not reach the truncation.  The stratum
    // at tail index m starts no lower than
    //   g(m) = m^2/8 + (b4 + sum(b_i)/2) m + C - sum(b_i^2)/2,
    // the real minimum of the separated exponent; g is a parabola opening
    // upward, so checking integer points through its vertex settles all m.
    let b_sum: Rat = t.b[..3].iter().sum();
    let b_sq: Rat = t.b[..3].iter().map(|x| x * x).sum();
    let g = |m: i64| -> Rat {
        rat(m * m, 8) + (&t.b[3] + &b_sum / rat_int(2)) * rat_int(m) + &t.c - &b_sq / rat_int(2)
    };
    let vertex = -rat_int(4) * &t.b[3] - rat_int(2) * &b_sum;
    let scan_end = rat_ceil(&vertex)
        .to_i64()
        .expect("vertex range")
        .max(n_max as i64 + 1);
    for m in (n_max as i64 + 1)..=scan_end {
        if g(m) <= *order {
            return Err(QError::NonTruncating {
                reason: format!(
                    "tail index {m} can reach exponent {}, order {} needs a larger bound than {n_max}",
                    fmt_rat(&g(m)),
                    fmt_rat(order)
                ),
            });
        }
    }

    let (lhs, _) = nahm_expand(t, None, order)?;

    let mut rhs = QExp::zero().truncated(order);
    for m in 0..=(n_max as i64) {
        let e_m = rat_int(m * m) / rat_int(2) + &t.b[3] * rat_int(m) + &t.c;
        let factors: Vec<PochSpec> = (0..3)
            .map(|i| {
                PochSpec::new(
                    rat_int(-1),
                    rat(1 - m, 2) + &t.b[i],
                    Rat::one(),
                    PochLen::Infinite,
                )
            })
            .collect();
        let pad: Rat = factors.iter().map(|f| f.negative_mass()).sum();
        // The stratum's true leading exponent: factors with negative
        // argument exponents reach below e_m by exactly the total mass.
        if &e_m + &pad > *order {
            continue;
        }
        let t_work = order - &e_m - pad;
        let finite = poch(
            &PochSpec::new(Rat::one(), Rat::one(), Rat::one(), PochLen::Finite(m as u32)),
            &t_work,
        )?;
        let mut term = finite.invert(&t_work)?;
        for f in &factors {
            term = term.mul(&poch(f, &t_work)?);
        }
        rhs = rhs.add(&term.mul_monomial(&Rat::one(), &e_m).truncated(order));
    }
    lhs.equal_to(&rhs, order)
}

// ---------------------------------------------------------------------------
// Rank-4 to rank-3 reindexing
// ---------------------------------------------------------------------------

/// Which member of the dual pair of rank-4 forms to reindex.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReindexSide {
    /// The separable form itself.
    Plain,
    /// Its dual.
    Dual,
}

/// Relates a rank-4 sum over the half-integer-shifted lattice to a rank-3
/// quadruple, by eliminating the tail coordinate.
///
/// For the parameter vector `b = (b1, b2, b3)` the rank-4 side uses the
/// linear part `(b1/2 - 1/4, b1/2 + 1/4, b2/2, b3/2)`; the rank-3 side uses
/// `b` itself with base multipliers `(1, 2, 2)`.  The rank-4 sum runs in
/// the square root of the rank-3 variable, so the sides are expanded at
/// `order/2` and `order/4` and rescaled by 2 and 4 respectively, landing
/// both on the same integer lattice at truncation `order`.  Returns
/// `(rank3, rank4)`; the sides are equal exactly when the reindexing holds.
pub fn reindex_rank4(b: &[Rat], side: ReindexSide, order: &Rat) -> Result<(QExp, QExp), QError> {
    if b.len() != 3 {
        return Err(QError::Dimension {
            context: format!("reindexing takes 3 parameters, got {}", b.len()),
        });
    }
    let half = order / rat_int(2);
    let quarter = order / rat_int(4);

    let a4_plain = vec![
        vec![rat_int(1), rat_int(0), rat_int(0), rat(-1, 2)],
        vec![rat_int(0), rat_int(1), rat_int(0), rat(-1, 2)],
        vec![rat_int(0), rat_int(0), rat_int(1), rat(-1, 2)],
        vec![rat(-1, 2), rat(-1, 2), rat(-1, 2), rat_int(1)],
    ];
    let a4 = match side {
        ReindexSide::Plain => a4_plain,
        ReindexSide::Dual => invert_mat(&a4_plain)?,
    };
    let b4 = vec![
        &b[0] / rat_int(2) - rat(1, 4),
        &b[0] / rat_int(2) + rat(1, 4),
        &b[1] / rat_int(2),
        &b[2] / rat_int(2),
    ];
    let rank4 = ModularTriple::new(a4, b4, Rat::zero());

    let a3 = match side {
        ReindexSide::Plain => vec![
            vec![rat_int(1), rat_int(0), rat(-1, 2)],
            vec![rat_int(0), rat_int(1), rat(-1, 2)],
            vec![rat_int(-1), rat(-1, 2), rat_int(1)],
        ],
        ReindexSide::Dual => vec![
            vec![rat_int(3), rat_int(1), rat_int(2)],
            vec![rat_int(2), rat_int(2), rat_int(2)],
            vec![rat_int(4), rat_int(2), rat_int(4)],
        ],
    };
    let rank3 = ModularQuadruple::new(a3, b.to_vec(), Rat::zero(), vec![1, 2, 2]);

    let (s3, _) = gnahm_expand(&rank3, None, &half)?;
    let (s4, _) = nahm_expand(&rank4, None, &quarter)?;
    Ok((s3.rescale(&rat_int(2))?, s4.rescale(&rat_int(4))?))
}

// ---------------------------------------------------------------------------
// JSON wire forms
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct TripleWire {
    #[serde(rename = "A")]
    a: Vec<Vec<String>>,
    #[serde(rename = "B")]
    b: Vec<String>,
    #[serde(rename = "C")]
    c: String,
}

#[derive(Serialize, Deserialize)]
struct QuadWire {
    #[serde(rename = "A")]
    a: Vec<Vec<String>>,
    #[serde(rename = "B")]
    b: Vec<String>,
    #[serde(rename = "C")]
    c: String,
    #[serde(rename = "D", skip_serializing_if = "Option::is_none")]
    d: Option<Vec<i64>>,
}

fn mat_to_wire(m: &[Vec<Rat>]) -> Vec<Vec<String>> {
    m.iter()
        .map(|row| row.iter().map(fmt_rat).collect())
        .collect()
}

fn mat_from_wire(m: &[Vec<String>]) -> Result<Vec<Vec<Rat>>, QError> {
    m.iter()
        .map(|row| row.iter().map(|s| parse_rat(s)).collect())
        .collect()
}

fn vec_from_wire(v: &[String]) -> Result<Vec<Rat>, QError> {
    v.iter().map(|s| parse_rat(s)).collect()
}

impl Serialize for ModularTriple {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        TripleWire {
            a: mat_to_wire(&self.a),
            b: self.b.iter().map(fmt_rat).collect(),
            c: fmt_rat(&self.c),
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for ModularTriple {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let w = TripleWire::deserialize(de)?;
        Ok(ModularTriple {
            a: mat_from_wire(&w.a).map_err(D::Error::custom)?,
            b: vec_from_wire(&w.b).map_err(D::Error::custom)?,
            c: parse_rat(&w.c).map_err(D::Error::custom)?,
        })
    }
}

impl Serialize for ModularQuadruple {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        QuadWire {
            a: mat_to_wire(&self.a),
            b: self.b.iter().map(fmt_rat).collect(),
            c: fmt_rat(&self.c),
            d: Some(self.d.clone()),
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for ModularQuadruple {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let w = QuadWire::deserialize(de)?;
        let a = mat_from_wire(&w.a).map_err(D::Error::custom)?;
        let d = w.d.unwrap_or_else(|| vec![1; a.len()]);
        Ok(ModularQuadruple {
            d,
            a,
            b: vec_from_wire(&w.b).map_err(D::Error::custom)?,
            c: parse_rat(&w.c).map_err(D::Error::custom)?,
        })
    }
}

impl Serialize for MonomialVector {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        let wire: Vec<[String; 2]> = self
            .entries
            .iter()
            .map(|(c, e)| [fmt_rat(c), fmt_rat(e)])
            .collect();
        wire.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for MonomialVector {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let wire: Vec<[String; 2]> = Vec::deserialize(de)?;
        let entries = wire
            .iter()
            .map(|[c, e]| Ok((parse_rat(c)?, parse_rat(e)?)))
            .collect::<Result<Vec<_>, QError>>()
            .map_err(D::Error::custom)?;
        Ok(MonomialVector { entries })
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::QExp;

    fn t(n: i64) -> Rat {
        rat_int(n)
    }

    fn mat(rows: &[&[(i64, i64)]]) -> Vec<Vec<Rat>> {
        rows.iter()
            .map(|r| r.iter().map(|&(p, q)| rat(p, q)).collect())
            .collect()
    }

    fn vecr(v: &[(i64, i64)]) -> Vec<Rat> {
        v.iter().map(|&(p, q)| rat(p, q)).collect()
    }

    /// Rank-4 matrix with identity block and -1/2 tail couplings.
    fn separable4() -> Vec<Vec<Rat>> {
        mat(&[
            &[(1, 1), (0, 1), (0, 1), (-1, 2)],
            &[(0, 1), (1, 1), (0, 1), (-1, 2)],
            &[(0, 1), (0, 1), (1, 1), (-1, 2)],
            &[(-1, 2), (-1, 2), (-1, 2), (1, 1)],
        ])
    }

    /// Rank-3 quadruple with bases (2,2,1) whose dual shows up throughout
    /// the tests.
    fn rank3_quad() -> ModularQuadruple {
        ModularQuadruple::new(
            mat(&[
                &[(2, 1), (2, 1), (2, 1)],
                &[(2, 1), (4, 1), (4, 1)],
                &[(1, 1), (2, 1), (3, 1)],
            ]),
            vecr(&[(0, 1), (-1, 1), (-1, 1)]),
            rat(-1, 48),
            vec![2, 2, 1],
        )
    }

    /// Independent expansion: scan a coordinate box, evaluate the exponent
    /// by the direct formula, and divide by Pochhammer factors computed
    /// from scratch at every point.
    fn box_oracle(
        q: &ModularQuadruple,
        spec: Option<&MonomialVector>,
        order: &Rat,
        side: i64,
    ) -> QExp {
        let r = q.rank();
        let s = q.s_matrix();
        let mut acc = QExp::zero().truncated(order);
        let mut n = vec![0i64; r];
        loop {
            let nv: Vec<Rat> = n.iter().map(|&x| rat_int(x)).collect();
            let sn = mat_vec(&s, &nv);
            let mut e = dot(&nv, &sn) / rat_int(2) + dot(&nv, &q.b) + &q.c;
            let mut coeff = Rat::one();
            if let Some(sp) = spec {
                for (i, (c, x)) in sp.entries.iter().enumerate() {
                    e += x * rat_int(n[i]);
                    coeff *= rat_pow(c, n[i]);
                }
            }
            if e <= *order {
                let rel = order - &e;
                let mut term = QExp::monomial(coeff, e);
                for i in 0..r {
                    let f = poch(
                        &PochSpec::new(
                            Rat::one(),
                            rat_int(q.d[i]),
                            rat_int(q.d[i]),
                            PochLen::Finite(n[i] as u32),
                        ),
                        &rel,
                    )
                    .unwrap();
                    term = term.mul(&f.invert(&rel).unwrap());
                }
                acc = acc.add(&term.truncated(order));
            } else {
                // The box must be generous enough that skipped boundary
                // points already exceed the order.
                assert!(n.iter().any(|&x| x > 0));
            }
            // advance the box counter
            let mut i = 0;
            loop {
                if i == r {
                    return acc;
                }
                n[i] += 1;
                if n[i] <= side {
                    break;
                }
                n[i] = 0;
                i += 1;
            }
        }
    }

    #[test]
    fn rank1_expansions() {
        let g1 = ModularTriple::new(mat(&[&[(2, 1)]]), vecr(&[(0, 1)]), Rat::zero());
        let (s, stats) = nahm_expand(&g1, None, &t(6)).unwrap();
        assert_eq!(s.to_string(), "1 + q + q^2 + q^3 + 2q^4 + 2q^5 + 3q^6");
        assert!(stats.points > 0);

        let g2 = ModularTriple::new(mat(&[&[(2, 1)]]), vecr(&[(1, 1)]), Rat::zero());
        let (s, _) = nahm_expand(&g2, None, &t(6)).unwrap();
        assert_eq!(s.to_string(), "1 + q^2 + q^3 + q^4 + q^5 + 2q^6");
    }

    #[test]
    fn negative_linear_center() {
        // B = -3 puts the exponent minimum at n = 3/2; both scan directions
        // and negative exponents are exercised.
        let g = ModularTriple::new(mat(&[&[(2, 1)]]), vecr(&[(-3, 1)]), Rat::zero());
        let (s, _) = nahm_expand(&g, None, &t(5)).unwrap();
        let oracle = box_oracle(&g.to_quadruple(), None, &t(5), 12);
        assert!(s.equal_to(&oracle, &t(5)).unwrap().is_equal());
        assert_eq!(s.leading().unwrap().0, t(-2));
    }

    #[test]
    fn generalized_rank2_matches_box_oracle() {
        let q = ModularQuadruple::new(
            mat(&[&[(1, 1), (1, 1)], &[(2, 1), (3, 1)]]),
            vecr(&[(-1, 2), (1, 1)]),
            rat(1, 24),
            vec![1, 2],
        );
        let h = t(8);
        let (s, stats) = gnahm_expand(&q, None, &h).unwrap();
        let oracle = box_oracle(&q, None, &h, 10);
        assert!(s.equal_to(&oracle, &h).unwrap().is_equal());
        assert!(stats.points >= 1);
    }

    #[test]
    fn generalized_rank3_matches_box_oracle() {
        let q = rank3_quad();
        let h = t(6);
        let (s, _) = gnahm_expand(&q, None, &h).unwrap();
        let oracle = box_oracle(&q, None, &h, 8);
        assert!(s.equal_to(&oracle, &h).unwrap().is_equal());
    }

    #[test]
    fn monomial_specialization_paths() {
        // Coefficient weights: sum (1/2)^n q^{n^2} / (q;q)_n.
        let g = ModularTriple::new(mat(&[&[(2, 1)]]), vecr(&[(0, 1)]), Rat::zero());
        let spec = MonomialVector {
            entries: vec![(rat(1, 2), Rat::zero())],
        };
        let h = t(7);
        let (s, _) = nahm_expand(&g, Some(&spec), &h).unwrap();
        let oracle = box_oracle(&g.to_quadruple(), Some(&spec), &h, 12);
        assert!(s.equal_to(&oracle, &h).unwrap().is_equal());

        // Exponent shifts: a two-variable sum collapsing to (-q;q)_inf.
        let q = ModularQuadruple::new(
            mat(&[&[(2, 1), (1, 1)], &[(2, 1), (2, 1)]]),
            vecr(&[(-1, 1), (-1, 1)]),
            Rat::zero(),
            vec![1, 2],
        );
        let spec = MonomialVector::powers([t(1), t(2)]);
        let (s, _) = gnahm_expand(&q, Some(&spec), &t(10)).unwrap();
        let product = poch(
            &PochSpec::new(rat(-1, 1), Rat::one(), Rat::one(), PochLen::Infinite),
            &t(10),
        )
        .unwrap();
        assert!(s.equal_to(&product, &t(10)).unwrap().is_equal());
    }

    #[test]
    fn empty_expansion_reports_no_points() {
        let g = ModularTriple::new(mat(&[&[(2, 1)]]), vecr(&[(0, 1)]), t(100));
        let (s, stats) = nahm_expand(&g, None, &t(10)).unwrap();
        assert!(s.is_zero());
        assert_eq!(stats.points, 0);
        assert_eq!(s.order(), &Horizon::Finite(t(10)));
    }

    #[test]
    fn indefinite_or_asymmetric_forms_rejected() {
        let bad = ModularTriple::new(mat(&[&[(1, 1), (2, 1)], &[(2, 1), (1, 1)]]), vec![Rat::zero(); 2], Rat::zero());
        assert!(matches!(
            nahm_expand(&bad, None, &t(4)),
            Err(QError::NotPositiveDefinite { minor: 2 })
        ));
        let skew = ModularQuadruple::new(
            mat(&[&[(1, 1), (1, 1)], &[(2, 1), (3, 1)]]),
            vec![Rat::zero(); 2],
            Rat::zero(),
            vec![1, 1],
        );
        assert!(matches!(
            gnahm_expand(&skew, None, &t(4)),
            Err(QError::NotSymmetric { .. })
        ));
    }

    #[test]
    fn dual_triple_frozen_values() {
        // Rank 1: (2, 0, -1/60) -> (1/2, 0, -1/40).
        let g = ModularTriple::new(mat(&[&[(2, 1)]]), vecr(&[(0, 1)]), rat(-1, 60));
        let d = dual_triple(&g).unwrap();
        assert_eq!(d.a, mat(&[&[(1, 2)]]));
        assert_eq!(d.b, vecr(&[(0, 1)]));
        assert_eq!(d.c, rat(-1, 40));
        assert_eq!(dual_triple(&d).unwrap(), g);

        // Rank 4, both linear parts of the separable form.
        let b1 = ModularTriple::new(
            separable4(),
            vecr(&[(0, 1), (1, 2), (1, 2), (-1, 2)]),
            rat(1, 16),
        );
        let d1 = dual_triple(&b1).unwrap();
        assert_eq!(
            d1.a,
            mat(&[
                &[(2, 1), (1, 1), (1, 1), (2, 1)],
                &[(1, 1), (2, 1), (1, 1), (2, 1)],
                &[(1, 1), (1, 1), (2, 1), (2, 1)],
                &[(2, 1), (2, 1), (2, 1), (4, 1)],
            ])
        );
        assert_eq!(d1.b, vecr(&[(0, 1), (1, 2), (1, 2), (0, 1)]));
        assert_eq!(d1.c, rat(1, 48));
        assert_eq!(dual_triple(&d1).unwrap(), b1);

        let b2 = ModularTriple::new(
            separable4(),
            vecr(&[(0, 1), (1, 2), (1, 2), (0, 1)]),
            rat(1, 16),
        );
        let d2 = dual_triple(&b2).unwrap();
        assert_eq!(d2.b, vecr(&[(1, 1), (3, 2), (3, 2), (2, 1)]));
        assert_eq!(d2.c, rat(25, 48));
    }

    #[test]
    fn dual_quadruple_frozen_values() {
        let q = rank3_quad();
        let d = dual_quadruple(&q).unwrap();
        assert_eq!(
            d.a,
            mat(&[
                &[(1, 1), (-1, 2), (0, 1)],
                &[(-1, 2), (1, 1), (-1, 1)],
                &[(0, 1), (-1, 2), (1, 1)],
            ])
        );
        // The honestly computed dual linear part.
        assert_eq!(d.b, vecr(&[(1, 2), (0, 1), (-1, 2)]));
        assert_eq!(d.c, rat(1, 16));
        assert_eq!(d.d, vec![2, 2, 1]);
        assert_eq!(dual_quadruple(&d).unwrap(), q);

        // A second linear part through the same matrix.
        let mut q2 = rank3_quad();
        q2.b = vecr(&[(1, 1), (0, 1), (1, 2)]);
        let d2 = dual_quadruple(&q2).unwrap();
        assert_eq!(d2.b, vecr(&[(1, 1), (-1, 1), (1, 2)]));
    }

    #[test]
    fn dual_rejects_singular() {
        let g = ModularTriple::new(
            mat(&[&[(1, 1), (1, 1)], &[(1, 1), (1, 1)]]),
            vec![Rat::zero(); 2],
            Rat::zero(),
        );
        assert!(matches!(dual_triple(&g), Err(QError::Singular)));
    }

    #[test]
    fn splitting_matches_direct_expansion() {
        let b1 = ModularTriple::new(
            separable4(),
            vecr(&[(0, 1), (1, 2), (1, 2), (-1, 2)]),
            rat(1, 16),
        );
        assert!(splitting_check(&b1, 8, &t(8)).unwrap().is_equal());
        // Bound too small for the order.
        assert!(matches!(
            splitting_check(&b1, 2, &t(8)),
            Err(QError::NonTruncating { .. })
        ));
        // Shape violations are rejected.
        let other = ModularTriple::new(identity_a(4), vec![Rat::zero(); 4], Rat::zero());
        assert!(splitting_check(&other, 5, &t(4)).is_err());
    }

    fn identity_a(n: usize) -> Vec<Vec<Rat>> {
        crate::matrix::identity(n)
    }

    #[test]
    fn reindex_sides_agree() {
        for b in [
            vecr(&[(1, 2), (1, 1), (-1, 1)]),
            vecr(&[(1, 2), (1, 1), (0, 1)]),
        ] {
            let (r3, r4) = reindex_rank4(&b, ReindexSide::Plain, &t(10)).unwrap();
            assert!(r3.equal_to(&r4, &t(10)).unwrap().is_equal());
            assert!(!r3.is_zero());
        }
        let b = vecr(&[(-1, 1), (0, 1), (-1, 1)]);
        let (r3, r4) = reindex_rank4(&b, ReindexSide::Dual, &t(10)).unwrap();
        assert!(r3.equal_to(&r4, &t(10)).unwrap().is_equal());
        // This parameter choice collapses to a single infinite product.
        let product = poch(
            &PochSpec::new(rat(-1, 1), Rat::one(), rat_int(2), PochLen::Infinite),
            &t(10),
        )
        .unwrap();
        assert!(r3.equal_to(&product, &t(10)).unwrap().is_equal());
        assert!(reindex_rank4(&vecr(&[(1, 1)]), ReindexSide::Plain, &t(4)).is_err());
    }

    #[test]
    fn quadruple_json_round_trip() {
        let q = rank3_quad();
        let s = q.to_json_string();
        assert_eq!(ModularQuadruple::from_json_str(&s).unwrap(), q);
        // D omitted on input defaults to all ones.
        let j = r#"{"A":[["2"]],"B":["0"],"C":"-1/60"}"#;
        let p = ModularQuadruple::from_json_str(j).unwrap();
        assert_eq!(p.d, vec![1]);
        // Triples serialize without D.
        let g = ModularTriple::new(mat(&[&[(2, 1)]]), vecr(&[(0, 1)]), rat(-1, 60));
        assert_eq!(g.to_json_string(), r#"{"A":[["2"]],"B":["0"],"C":"-1/60"}"#);
        assert_eq!(ModularTriple::from_json_str(&g.to_json_string()).unwrap(), g);
    }

    #[test]
    fn monomial_vector_json_round_trip() {
        let m = MonomialVector {
            entries: vec![(rat(1, 2), rat(-1, 2)), (Rat::one(), t(2))],
        };
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"[["1/2","-1/2"],["1","2"]]"#);
        let back: MonomialVector = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }
}
