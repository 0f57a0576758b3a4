//! Wave-aligned 1D convolutional classifier for longitudinal survey data.
//!
//! Longitudinal ("panel") surveys record the same features for each
//! participant over several waves. When the data are laid out in short/wide
//! format with the wave values of each feature in consecutive columns, a
//! 1D convolution whose width equals its stride reads one feature block at
//! a time, so features are never muddled together. This crate implements
//! that pipeline end to end:
//!
//! - [`data`]: long/wide table types, pivoting, missingness filtering,
//!   adjacent-wave imputation, stratified splitting and z-normalization.
//! - [`resample`]: ROS, SMOTE, ADASYN, SMOTE+ENN and SMOTE+Tomek for the
//!   heavy class imbalance of mortality outcomes.
//! - [`nn`]: a small feed-forward engine (conv1d / activation / flatten /
//!   dense) with backprop, Adam, binary cross entropy and early stopping.
//! - [`metrics`]: accuracy, ROC curves and AUC with exact tie handling.
//! - [`cohort`]: a seeded generator for synthetic longitudinal cohorts.
//! - [`pipeline`]: the experiment driver (split, resample, normalize,
//!   train, evaluate) and the resampler x activation sweep.

pub mod cohort;
pub mod data;
pub mod matrix;
pub mod metrics;
pub mod nn;
pub mod pipeline;
pub mod resample;

pub use matrix::LabeledMatrix;
