//! Forecasting experiments for daily stock prices with macroeconomic and
//! anticipated interest-rate features.
//!
//! The pipeline runs ingest → ticker selection by partial autocorrelation →
//! feature engineering → OLS validation → tree models (CART, second-order
//! gradient boosting with GOSS and exclusive feature bundling) → a
//! with/without ablation report.

pub mod data_ingest;
pub mod error;
pub mod eval_harness;
pub mod feature_lab;
pub mod gbm;
pub mod linear_model;
pub mod synthetic;
pub mod tree_model;
pub mod ts_stats;

pub use error::{Error, Result};
