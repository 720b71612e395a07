//! Item response theory on dichotomized course grades and differential
//! course functioning (DCF) detection.
//!
//! The pipeline runs from raw enrollments to DCF reports:
//!
//! - [`data`]: parse enrollments, dichotomize at the achievement grade,
//!   filter to a fixpoint, build the ±1 group encoding.
//! - [`irt`]: 1PL / 2PL / multidimensional 2PL fitting by marginal maximum
//!   likelihood (EM over a fixed quadrature grid), EAP traits, simulation.
//! - [`diagnostics`]: BIC model selection, Yen's Q3, split-half reliability,
//!   concurrent validity.
//! - [`dcf`]: per-course offset logistic regression, likelihood-ratio tests,
//!   Benjamini-Hochberg control, AR-difference baseline and case taxonomy.
//! - [`power`]: Monte Carlo power and FDR studies.
//! - [`report`]: CSV writers for the exported artifacts.

pub mod data;
pub mod dcf;
pub mod diagnostics;
pub mod irt;
pub mod power;
pub mod report;
pub mod stats;
