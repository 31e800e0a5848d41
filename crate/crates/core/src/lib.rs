//! k-additive Shapley regression.
//!
//! A logistic model whose predictor is a cooperative game over feature
//! coalitions, parameterized directly by its Shapley interaction indices:
//!
//! ```text
//! P(y = 1 | x) = sigmoid(bias + sum_{0 < |A| <= k} I(A) * phi_A(x))
//! ```
//!
//! Modules, bottom-up: [`coalition`] and [`game`] hold set functions and the
//! capacity / Möbius / Shapley transforms; [`basis`] builds the feature map
//! and the model; [`trainer`] fits it; [`analysis`] extracts interactions and
//! computes capacity measures; [`bench`] runs the evaluation protocols;
//! [`cli`] is the command-line front end.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod basis;
pub mod bench;
pub mod cli;
pub mod coalition;
pub mod error;
pub mod game;
pub mod matrix;
pub mod seed;
pub mod stats;
pub mod trainer;

pub use basis::{design_matrix, phi, DesignMatrix, Normalization, ShapleyModel};
pub use coalition::{combinatorial_dimension, enumerate_coalitions, Coalition, CoalitionIndex};
pub use error::{Error, Result};
pub use game::{
    capacity_from_mobius, choquet_mobius, mobius_from_capacity, mobius_from_shapley,
    shapley_from_mobius, truncate_k_additive, Basis, Game, SetFunction,
};
pub use matrix::Matrix;
pub use trainer::{fit, loss_and_gradient, ClassWeighting, FitConfig, FitResult, Penalty};
