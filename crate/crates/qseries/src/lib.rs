//! Exact q-series toolkit: truncated Laurent-Puiseux series over the
//! rationals, Pochhammer and eta products, Nahm-type multi-sum expansion
//! with dual transforms, Bailey pair machinery, a catalog of checkable
//! identities, and an eta-quotient recognizer.
//!
//! Every computation is exact rational arithmetic; every series carries an
//! explicit truncation order so that equality checks compare only
//! coefficients both sides actually know.

pub mod error;
pub mod rat;
pub mod series;

pub mod bailey;
pub mod catalog;
pub mod etafit;
pub mod expr;
pub mod matrix;
pub mod nahm;
pub mod products;

pub use error::QError;
pub use rat::{fmt_rat, parse_rat, rat, rat_int, Rat};
pub use series::{Comparison, Horizon, QExp};

pub use products::{
    eta_expand, jacobi_cube, jacobi_triple, poch, theta_phi, theta_psi, EtaQuotient, PochLen,
    PochSpec,
};

pub use bailey::{
    apply_transform, builtin_pair, finite_identity_check, verify_pair, AClass, BaileyPair,
    FiniteIdentity, PairId, Transform,
};
pub use catalog::{
    builtin_catalog, catalog_from_json, catalog_to_json, q_gauss_check, run_catalog,
    verify_identity, CatalogSummary, IdentityRecord, RecordOutcome, RecordResult, VerifyReport,
};
pub use etafit::{classify, default_moduli, fit_eta, weight, Classification, FitOutcome};
pub use expr::{eval_expr, eval_sum, Expr, FactorLen, SumFactor, SumSpec, ThetaKind};
pub use matrix::check_posdef;
pub use nahm::{
    dual_quadruple, dual_triple, gnahm_expand, nahm_expand, reindex_rank4, splitting_check,
    ExpandStats, ModularQuadruple, ModularTriple, MonomialVector, ReindexSide,
};
