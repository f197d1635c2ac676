//! Space-time saddle-point discretization of quasi-linear parabolic problems
//! on `(0, T) × (0, 1)`, solved by inexact Uzawa iteration with inner
//! Zarantonello loops.
//!
//! The library is generic over the scalar type ([`Scalar`], implemented for
//! `f32` and `f64`); the `*64` aliases at the crate root fix `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod linalg;
pub mod monotone;
pub mod precond;
pub mod quality;
pub mod riesz;
pub mod rng;
pub mod scalar;
pub mod spaces;
pub mod system;
pub mod uzawa;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type SparseMatrix64 = linalg::SparseMatrix<f64>;
pub type DenseMatrix64 = linalg::DenseMatrix<f64>;
pub type SpdFactorization64 = linalg::SpdFactorization<f64>;
pub type KroneckerOperator64 = linalg::KroneckerOperator<f64>;

pub type Mesh1D64 = spaces::Mesh1D<f64>;
pub type FeSpace1D64 = spaces::FeSpace1D<f64>;
pub type TensorSpacePair64 = spaces::TensorSpacePair<f64>;
pub type MuCoefficient64 = monotone::MuCoefficient<f64>;
pub type GalerkinOperator64 = monotone::GalerkinOperator<f64>;
pub type RieszContext64 = riesz::RieszContext<f64>;
pub type ProblemData64 = system::ProblemData<f64>;
pub type SaddleSystem64 = system::SaddleSystem<f64>;
pub type SaddleState64 = system::SaddleState<f64>;
pub type ConstantsBundle64 = system::ConstantsBundle<f64>;
pub type UzawaConfig64 = uzawa::UzawaConfig<f64>;
pub type FineReference64 = quality::FineReference<f64>;
pub type BlockDiagPrecond64 = precond::BlockDiagPrecond<f64>;
