//! Command-line front door for the exact q-series toolkit: expand
//! multi-sums, dualize their defining data, run the identity catalog,
//! verify Bailey pairs and their transforms, and fit eta quotients.
//!
//! Exit codes are a stable contract: 0 on success, 1 on a mathematical
//! mismatch (a failed verification or a series that fits nothing), 2 on
//! usage or input errors.  All output is deterministic for fixed inputs.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qseries::{
    apply_transform, builtin_catalog, builtin_pair, catalog_from_json, default_moduli, dual_quadruple,
    eval_expr, fit_eta, fmt_rat, gnahm_expand, parse_rat, run_catalog, verify_pair, Comparison, Expr,
    FitOutcome, ModularQuadruple, MonomialVector, PairId, QExp, RecordOutcome, Transform,
};

// ---------------------------------------------------------------------------
// Arguments
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "qnahm",
    version,
    about = "Exact q-series toolkit: multi-sum expansion, duality, identity catalog"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Expand a multi-sum from its JSON data file
    Expand {
        /// JSON file holding {"A": [[..]], "B": [..], "C": "..", "D": [..]?}
        input: PathBuf,
        /// Truncation order (exact rational, e.g. 25 or 51/2)
        #[arg(long, default_value = "12")]
        order: String,
        /// Optional JSON file with per-variable monomial weights
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Print the series as JSON instead of human-readable text
        #[arg(long)]
        json: bool,
    },
    /// Print the dual of a triple or quadruple data file
    Dual {
        /// JSON data file; a "D" key selects the generalized transform
        input: PathBuf,
        /// Also expand both sides at this order and report their eta fits
        #[arg(long)]
        check: Option<String>,
    },
    /// Verify the built-in identity catalog (or one loaded from a file)
    Catalog {
        /// JSON catalog file; defaults to the built-in records
        #[arg(long)]
        path: Option<PathBuf>,
        /// Override every record's truncation order
        #[arg(long)]
        order: Option<String>,
        /// Keep only records whose name contains this substring
        #[arg(long)]
        filter: Option<String>,
        /// Bound the number of worker threads
        #[arg(long)]
        parallel: Option<usize>,
        /// Print results as JSON
        #[arg(long)]
        json: bool,
    },
    /// Check a Bailey pair's defining relation or one of its transforms
    Bailey {
        /// Which built-in pair: bp1, bp2, bp3, or bp4
        #[arg(long)]
        pair: String,
        /// Base rescaling q -> q^scale (positive rational)
        #[arg(long, default_value = "1")]
        scale: String,
        /// Verify the defining relation for all indices up to this bound
        #[arg(long, default_value = "10")]
        nmax: u32,
        /// Truncation order for all series comparisons
        #[arg(long, default_value = "25")]
        order: String,
        /// Check a transform instead: t128, tbl, or s2bl
        #[arg(long)]
        transform: Option<String>,
    },
    /// Fit a series as scalar * q^v * product of (q^m;q^m)_inf powers
    Fit {
        /// JSON series file (as written by expand --json)
        input: Option<PathBuf>,
        /// Inline expression JSON, evaluated at --order
        #[arg(long)]
        expr: Option<String>,
        /// Comma-separated moduli (rationals); default: divisors of 12,
        /// plus 1/2 when the series has half-integer exponents
        #[arg(long)]
        moduli: Option<String>,
        /// Working order for evaluation and verification
        #[arg(long, default_value = "25")]
        order: String,
    },
}

// ---------------------------------------------------------------------------
// Entry
// ---------------------------------------------------------------------------

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(code) => ExitCode::from(code),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

/// Ok carries the exit code (0 clean, 1 mathematical mismatch); Err is a
/// usage or input problem and exits 2.
fn run(cmd: Cmd) -> Result<u8, String> {
    match cmd {
        Cmd::Expand {
            input,
            order,
            spec,
            json,
        } => cmd_expand(&input, &order, spec.as_deref(), json),
        Cmd::Dual { input, check } => cmd_dual(&input, check.as_deref()),
        Cmd::Catalog {
            path,
            order,
            filter,
            parallel,
            json,
        } => cmd_catalog(path.as_deref(), order.as_deref(), filter.as_deref(), parallel, json),
        Cmd::Bailey {
            pair,
            scale,
            nmax,
            order,
            transform,
        } => cmd_bailey(&pair, &scale, nmax, &order, transform.as_deref()),
        Cmd::Fit {
            input,
            expr,
            moduli,
            order,
        } => cmd_fit(input.as_deref(), expr.as_deref(), moduli.as_deref(), &order),
    }
}

fn read_file(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn parse_order(s: &str) -> Result<qseries::Rat, String> {
    parse_rat(s).map_err(|e| e.to_string())
}

// ---------------------------------------------------------------------------
// expand
// ---------------------------------------------------------------------------

fn cmd_expand(input: &Path, order: &str, spec: Option<&Path>, json: bool) -> Result<u8, String> {
    let order = parse_order(order)?;
    let data = read_file(input)?;
    let quad: ModularQuadruple =
        serde_json::from_str(&data).map_err(|e| format!("{}: {e}", input.display()))?;
    let monomials: Option<MonomialVector> = match spec {
        None => None,
        Some(p) => Some(serde_json::from_str(&read_file(p)?).map_err(|e| format!("{}: {e}", p.display()))?),
    };
    let (series, _) = gnahm_expand(&quad, monomials.as_ref(), &order).map_err(|e| e.to_string())?;
    if json {
        println!("{}", series.to_json_string());
    } else {
        println!("{series}");
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// dual
// ---------------------------------------------------------------------------

fn cmd_dual(input: &Path, check: Option<&str>) -> Result<u8, String> {
    let data = read_file(input)?;
    let value: serde_json::Value =
        serde_json::from_str(&data).map_err(|e| format!("{}: {e}", input.display()))?;
    let generalized = value.get("D").is_some();
    let quad: ModularQuadruple =
        serde_json::from_str(&data).map_err(|e| format!("{}: {e}", input.display()))?;
    let dual = dual_quadruple(&quad).map_err(|e| e.to_string())?;
    if generalized {
        println!("{}", serde_json::to_string_pretty(&dual).expect("serializable"));
    } else {
        // Plain input: present the dual in the same D-free form.
        let wire = serde_json::json!({
            "A": dual.a.iter().map(|row| row.iter().map(fmt_rat).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "B": dual.b.iter().map(fmt_rat).collect::<Vec<_>>(),
            "C": fmt_rat(&dual.c),
        });
        println!("{}", serde_json::to_string_pretty(&wire).expect("serializable"));
    }
    if let Some(order) = check {
        let order = parse_order(order)?;
        let (primal, _) = gnahm_expand(&quad, None, &order).map_err(|e| e.to_string())?;
        let (image, _) = gnahm_expand(&dual, None, &order).map_err(|e| e.to_string())?;
        println!("primal: {}", fit_report(&primal, None, &order)?);
        println!("dual:   {}", fit_report(&image, None, &order)?);
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// catalog
// ---------------------------------------------------------------------------

fn cmd_catalog(
    path: Option<&Path>,
    order: Option<&str>,
    filter: Option<&str>,
    parallel: Option<usize>,
    json: bool,
) -> Result<u8, String> {
    let records = match path {
        None => builtin_catalog(),
        Some(p) => catalog_from_json(&read_file(p)?).map_err(|e| format!("{}: {e}", p.display()))?,
    };
    let order = match order {
        None => None,
        Some(s) => Some(parse_order(s)?),
    };
    let run = || run_catalog(&records, order.as_ref(), filter);
    let summary = match parallel {
        None => run(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| e.to_string())?
            .install(run),
    };

    let mut passed = 0usize;
    let mut expected = 0usize;
    let mut failed = 0usize;
    let mut rows = Vec::new();
    for r in &summary.results {
        let (status, detail) = match &r.outcome {
            RecordOutcome::Pass => {
                passed += 1;
                ("PASS", String::new())
            }
            RecordOutcome::ExpectedFail { diff } => {
                expected += 1;
                ("XFAIL", diff_text(diff))
            }
            RecordOutcome::Fail { diff } => {
                failed += 1;
                ("FAIL", diff_text(diff))
            }
            RecordOutcome::UnexpectedPass => {
                failed += 1;
                ("FAIL", "expected a failure, but both sides agree".into())
            }
            RecordOutcome::Error { message } => {
                failed += 1;
                ("ERROR", message.clone())
            }
        };
        rows.push((r.name.clone(), status, detail));
    }

    if json {
        let body: Vec<serde_json::Value> = rows
            .iter()
            .map(|(name, status, detail)| {
                serde_json::json!({"name": name, "status": status, "detail": detail})
            })
            .collect();
        println!("{}", serde_json::to_string_pretty(&body).expect("serializable"));
    } else {
        for (name, status, detail) in &rows {
            if detail.is_empty() {
                println!("{status:<5} {name}");
            } else {
                println!("{status:<5} {name} ({detail})");
            }
        }
        println!(
            "{} records: {passed} passed, {expected} expected failures, {failed} failed",
            summary.results.len()
        );
    }
    Ok(if summary.all_green() { 0 } else { 1 })
}

fn diff_text(diff: &Comparison) -> String {
    match diff {
        Comparison::Equal => "equal".into(),
        Comparison::Differs { exponent, lhs, rhs } => format!(
            "differs at q^{}: {} vs {}",
            exp_text(exponent),
            fmt_rat(lhs),
            fmt_rat(rhs)
        ),
    }
}

// ---------------------------------------------------------------------------
// bailey
// ---------------------------------------------------------------------------

fn cmd_bailey(
    pair: &str,
    scale: &str,
    nmax: u32,
    order: &str,
    transform: Option<&str>,
) -> Result<u8, String> {
    let which = PairId::parse(pair).map_err(|e| e.to_string())?;
    let scale = parse_order(scale)?;
    let order = parse_order(order)?;
    let p = builtin_pair(which, scale).map_err(|e| e.to_string())?;

    if let Some(t) = transform {
        let t = Transform::parse(t).map_err(|e| e.to_string())?;
        let (lhs, rhs) = apply_transform(&p, t, &order).map_err(|e| e.to_string())?;
        println!("lhs: {}", first_terms(&lhs, 10));
        println!("rhs: {}", first_terms(&rhs, 10));
        return match lhs.equal_to(&rhs, &order).map_err(|e| e.to_string())? {
            Comparison::Equal => {
                println!("EQUAL");
                Ok(0)
            }
            diff => {
                println!("DIFFER ({})", diff_text(&diff));
                Ok(1)
            }
        };
    }

    match verify_pair(&p, nmax, &order).map_err(|e| e.to_string())? {
        None => {
            println!("PASS");
            Ok(0)
        }
        Some((n, diff)) => {
            println!("FAIL at n = {n} ({})", diff_text(&diff));
            Ok(1)
        }
    }
}

/// The first `k` nonzero terms of a series, in display form.
fn first_terms(f: &QExp, k: usize) -> String {
    let terms = f.terms();
    if terms.len() <= k {
        return f.to_string();
    }
    format!("{} + ...", f.truncated(&terms[k - 1].0))
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

fn cmd_fit(
    input: Option<&Path>,
    expr: Option<&str>,
    moduli: Option<&str>,
    order: &str,
) -> Result<u8, String> {
    let order = parse_order(order)?;
    let series = match (input, expr) {
        (Some(path), None) => {
            QExp::from_json_str(&read_file(path)?).map_err(|e| format!("{}: {e}", path.display()))?
        }
        (None, Some(text)) => {
            let e: Expr = serde_json::from_str(text).map_err(|e| format!("--expr: {e}"))?;
            eval_expr(&e, &order).map_err(|e| e.to_string())?
        }
        _ => return Err("pass exactly one of a series file or --expr".into()),
    };
    let moduli = match moduli {
        Some(list) => list
            .split(',')
            .map(|s| parse_rat(s.trim()).map_err(|e| e.to_string()))
            .collect::<Result<Vec<_>, _>>()?,
        None => default_moduli(series.denom() != 1),
    };
    let report = fit_report(&series, Some(&moduli), &order)?;
    println!("{report}");
    Ok(if report.starts_with("not a") { 1 } else { 0 })
}

/// One-line eta-fit verdict for a series; picks default moduli when none
/// are supplied.
fn fit_report(f: &QExp, moduli: Option<&[qseries::Rat]>, order: &qseries::Rat) -> Result<String, String> {
    let owned;
    let moduli = match moduli {
        Some(m) => m,
        None => {
            owned = default_moduli(f.denom() != 1);
            &owned
        }
    };
    match fit_eta(f, moduli, order).map_err(|e| e.to_string())? {
        FitOutcome::Quotient(e) => {
            let mut out = String::new();
            if !e.scalar.is_one_rat() {
                out.push_str(&format!("scalar {}, ", fmt_rat(&e.scalar)));
            }
            if !e.vshift.is_zero_rat() {
                out.push_str(&format!("shift q^{}, ", exp_text(&e.vshift)));
            }
            out.push_str(&format!("{}, weight {}", e.brace_string(), fmt_rat(&e.weight())));
            Ok(out)
        }
        FitOutcome::NotQuotient { residual } => Ok(format!(
            "not a single eta quotient (first residual exponent {})",
            fmt_rat(&residual)
        )),
    }
}

/// Exponent in display form: braced when negative or fractional.
fn exp_text(e: &qseries::Rat) -> String {
    let plain = fmt_rat(e);
    if plain.contains('/') || plain.starts_with('-') {
        format!("{{{plain}}}")
    } else {
        plain
    }
}

// Local helpers so the binary does not need the num-traits crate.
trait RatTests {
    fn is_one_rat(&self) -> bool;
    fn is_zero_rat(&self) -> bool;
}

impl RatTests for qseries::Rat {
    fn is_one_rat(&self) -> bool {
        *self == parse_rat("1").expect("static rational")
    }
    fn is_zero_rat(&self) -> bool {
        *self == parse_rat("0").expect("static rational")
    }
}
