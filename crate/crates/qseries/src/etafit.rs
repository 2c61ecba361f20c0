//! Recognizing eta quotients from their q-expansions.
//!
//! `fit_eta` decides whether a series is `scalar * q^v * prod (q^m;q^m)_inf^{e_m}`
//! over a caller-supplied set of moduli, recovering the exponents exactly
//! when it is.  The method is the logarithmic one: after normalizing the
//! leading term away, the log of the series must be an integer combination
//! of the logs of the individual products, whose coefficients are known in
//! closed form.  A candidate found by linear algebra is only accepted after
//! its re-expansion matches the input everywhere up to the working order.
//!
//! `classify` applies the fitter to a sum of terms and reports whether the
//! sum itself is a single quotient, or each term is one (with the list of
//! weights: distinct weights are the mixed-weight signature), or neither.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::error::QError;
use crate::products::{eta_expand, EtaQuotient};
use crate::rat::{fmt_rat, rat_int, Rat};
use crate::series::{Comparison, Horizon, QExp};

// ---------------------------------------------------------------------------
// Single-quotient fit
// ---------------------------------------------------------------------------

/// Result of a fit: either the recovered quotient or the first exponent
/// (in the input series' own frame) witnessing that no quotient over the
/// given moduli matches.
#[derive(Clone, Debug, PartialEq)]
pub enum FitOutcome {
    Quotient(EtaQuotient),
    NotQuotient { residual: Rat },
}

impl FitOutcome {
    pub fn quotient(&self) -> Option<&EtaQuotient> {
        match self {
            FitOutcome::Quotient(e) => Some(e),
            FitOutcome::NotQuotient { .. } => None,
        }
    }
}

/// Coefficient of `q^N` in `log (q^m;q^m)_inf`: `-sigma_1(k)/k` when
/// `N = m*k` for an integer `k >= 1`, else `0`.
fn log_coeff(m: &Rat, n: &Rat) -> Rat {
    let k = n / m;
    if !k.is_integer() || !k.is_positive() {
        return Rat::zero();
    }
    let k = k.to_integer();
    let mut sigma = BigInt::from(0);
    let mut d = BigInt::from(1);
    while &d * &d <= k {
        if (&k % &d).is_zero() {
            sigma += &d;
            let co = &k / &d;
            if co != d {
                sigma += co;
            }
        }
        d += 1;
    }
    -Rat::new(sigma, k)
}

fn check_moduli(moduli: &[Rat]) -> Result<(), QError> {
    if moduli.is_empty() {
        return Err(QError::BadSpecialization {
            reason: "fit needs at least one modulus".into(),
        });
    }
    let mut sorted = moduli.to_vec();
    sorted.sort();
    for (m, next) in sorted.iter().zip(&sorted[1..]) {
        if m == next {
            return Err(QError::BadSpecialization {
                reason: format!("duplicate modulus {}", fmt_rat(m)),
            });
        }
    }
    if let Some(m) = sorted.iter().find(|m| !m.is_positive()) {
        return Err(QError::BadSpecialization {
            reason: format!("modulus must be positive, got {}", fmt_rat(m)),
        });
    }
    Ok(())
}

/// Fits `f` as `scalar * q^v * prod_m (q^m;q^m)_inf^{e_m}` over `moduli`,
/// comparing up to `t` (capped by the order `f` actually certifies).
///
/// The linear solve pins the exponents using the first attainable log
/// coefficients; the candidate is then re-expanded and compared against
/// `f` coefficient by coefficient, so a returned quotient is never a
/// partial match.  Needs at least `moduli.len() + 5` attainable log
/// coefficients below the working order.
pub fn fit_eta(f: &QExp, moduli: &[Rat], t: &Rat) -> Result<FitOutcome, QError> {
    check_moduli(moduli)?;
    let (v, c) = match f.leading() {
        Some((v, c)) => (v, c.clone()),
        None => {
            return Err(QError::BadSpecialization {
                reason: "zero series has no product form".into(),
            })
        }
    };
    let t_f = match f.order() {
        Horizon::Infinite => t.clone(),
        Horizon::Finite(h) => if h < t { h.clone() } else { t.clone() },
    };

    // Normalized frame: h = f / (c q^v) = 1 + higher order terms.
    let t_n = &t_f - &v;
    let h = f.mul_monomial(&c.recip(), &(-&v)).truncated(&t_n);
    let g = h.log(&t_n)?;

    // Exponents where some log can contribute, in increasing order.
    let mut attainable: Vec<Rat> = Vec::new();
    for m in moduli {
        let mut k = 1i64;
        loop {
            let e = m * rat_int(k);
            if e > t_n {
                break;
            }
            attainable.push(e);
            k += 1;
        }
    }
    attainable.sort();
    attainable.dedup();
    let needed = moduli.len() + 5;
    if attainable.len() < needed {
        return Err(QError::InsufficientTruncation {
            requested: format!("{needed} usable log coefficients"),
            known: format!("{} below order {}", attainable.len(), fmt_rat(&t_n)),
        });
    }

    // Exact Gauss-Jordan over rows [L_{m_1}(N) .. L_{m_w}(N) | g_N],
    // taken in increasing N until every column is pinned.
    let w = moduli.len();
    let mut pivot_rows: Vec<Vec<Rat>> = Vec::new();
    let mut pivot_cols: Vec<usize> = Vec::new();
    let mut pivot_exps: Vec<Rat> = Vec::new();
    for n in &attainable {
        if pivot_cols.len() == w {
            break;
        }
        let mut row: Vec<Rat> = moduli.iter().map(|m| log_coeff(m, n)).collect();
        row.push(g.coeff(n).unwrap_or_else(Rat::zero));
        for (r, col) in pivot_rows.iter().zip(&pivot_cols) {
            let factor = row[*col].clone();
            if factor.is_zero() {
                continue;
            }
            for (x, y) in row.iter_mut().zip(r) {
                *x -= &factor * y;
            }
        }
        let Some(col) = (0..w).find(|j| !row[*j].is_zero()) else {
            if row[w].is_zero() {
                continue;
            }
            // The log already contradicts every combination of products.
            return Ok(FitOutcome::NotQuotient { residual: n + &v });
        };
        let inv = row[col].recip();
        for x in row.iter_mut() {
            *x *= &inv;
        }
        for r in pivot_rows.iter_mut() {
            let factor = r[col].clone();
            if factor.is_zero() {
                continue;
            }
            for (y, x) in r.iter_mut().zip(&row) {
                *y -= &factor * x;
            }
        }
        pivot_rows.push(row);
        pivot_cols.push(col);
        pivot_exps.push(n.clone());
    }

    // Unpinned moduli get exponent zero; pinned ones must come out integral.
    let mut exps: Vec<Rat> = vec![Rat::zero(); w];
    for (r, col) in pivot_rows.iter().zip(&pivot_cols) {
        exps[*col] = r[w].clone();
    }
    for (j, e) in exps.iter().enumerate() {
        if e.is_integer() {
            continue;
        }
        let witness = pivot_cols
            .iter()
            .position(|c| c == &j)
            .map(|i| pivot_exps[i].clone())
            .unwrap_or_else(|| attainable[0].clone());
        return Ok(FitOutcome::NotQuotient {
            residual: witness + &v,
        });
    }

    let candidate = EtaQuotient::new(
        c,
        v,
        moduli
            .iter()
            .zip(&exps)
            .map(|(m, e)| (m.clone(), e.to_integer().try_into().unwrap_or(i64::MAX))),
    )?;

    // Mandatory verification: the fit used only the first few coefficients,
    // the claim covers all of them.
    let expansion = eta_expand(&candidate, &t_f)?;
    match expansion.equal_to(f, &t_f)? {
        Comparison::Equal => Ok(FitOutcome::Quotient(candidate)),
        Comparison::Differs { exponent, .. } => Ok(FitOutcome::NotQuotient { residual: exponent }),
    }
}

/// Half the sum of the exponents of a quotient.
pub fn weight(e: &EtaQuotient) -> Rat {
    e.weight()
}

/// Default moduli set: the divisors of 12, plus 1/2 when the series lives
/// on the half-integer lattice.
pub fn default_moduli(half_lattice: bool) -> Vec<Rat> {
    let mut out: Vec<Rat> = [1, 2, 3, 4, 6, 12].iter().map(|m| rat_int(*m)).collect();
    if half_lattice {
        out.insert(0, Rat::new(1.into(), 2.into()));
    }
    out
}

// ---------------------------------------------------------------------------
// Term classification
// ---------------------------------------------------------------------------

/// Structure report for a sum of terms.
#[derive(Clone, Debug, PartialEq)]
pub enum Classification {
    /// The summed series is a single quotient.
    SingleQuotient(EtaQuotient),
    /// The sum is not, but every term is; the weight list is the verdict
    /// (distinct weights mean no single modular rescaling can exist).
    MixedWeights(Vec<(EtaQuotient, Rat)>),
    /// Neither the sum nor some term fits.
    Unrecognized,
}

impl Classification {
    /// The distinct weights present, sorted.
    pub fn weights(&self) -> Vec<Rat> {
        match self {
            Classification::SingleQuotient(e) => vec![e.weight()],
            Classification::MixedWeights(terms) => {
                let mut ws: Vec<Rat> = terms.iter().map(|(_, w)| w.clone()).collect();
                ws.sort();
                ws.dedup();
                ws
            }
            Classification::Unrecognized => Vec::new(),
        }
    }
}

/// Classifies `sum_i c_i * f_i`: first tries the summed series as one
/// quotient, then each scaled term on its own.
pub fn classify(terms: &[(Rat, QExp)], moduli: &[Rat], t: &Rat) -> Result<Classification, QError> {
    if terms.is_empty() {
        return Err(QError::BadSpecialization {
            reason: "classify needs at least one term".into(),
        });
    }
    let mut total = QExp::zero().truncated(t);
    for (c, f) in terms {
        total = total.add(&f.mul_monomial(c, &Rat::zero()));
    }
    if !total.is_zero() {
        if let FitOutcome::Quotient(e) = fit_eta(&total, moduli, t)? {
            return Ok(Classification::SingleQuotient(e));
        }
    }
    let mut fitted = Vec::with_capacity(terms.len());
    for (c, f) in terms {
        let scaled = f.mul_monomial(c, &Rat::zero());
        match fit_eta(&scaled, moduli, t)? {
            FitOutcome::Quotient(e) => {
                let w = e.weight();
                fitted.push((e, w));
            }
            FitOutcome::NotQuotient { .. } => return Ok(Classification::Unrecognized),
        }
    }
    Ok(Classification::MixedWeights(fitted))
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
