//! Quantum capacities of coding models for finite-dimensional channels.
//!
//! The crate is organised bottom-up:
//!
//! * [`linalg`] – dense complex matrices, Hermitian eigensolver, partial trace.
//! * [`channel`] – Kraus/Choi/complementary/affine representations of channels.
//! * [`entropic`] – entropies, coherent and mutual information, entanglement fidelity.
//! * [`optim`] – multi-start Nelder–Mead used by every optimized quantity.
//! * [`capacity`] – Q_I, Q_II, Q_IV, the one-shot Q_V and the EA classical capacities.
//! * [`decompose`] – generalized extreme qubit channels and the convex-decomposition bound.
//! * [`sampling`] – Haar-random qubit channels of prescribed Choi rank.
//! * [`coding`] – encoder/decoder codings, Knill–Laflamme checks, builtin small codes.
//! * [`experiments`] – batch scatter runs, CSV persistence and SVG figures.
//!
//! All entropies are in bits.

pub mod capacity;
pub mod channel;
pub mod coding;
pub mod decompose;
pub mod entropic;
mod error;
pub mod experiments;
pub mod linalg;
pub mod optim;
pub mod sampling;

pub use channel::{AffineRep, ChoiMatrix, QChannel};
pub use error::{Error, Result};
pub use linalg::{CMatrix, C64};
