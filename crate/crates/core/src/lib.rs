//! Temporal-mode demultiplexing of polarization-entangled photon pairs by
//! chirped sum-frequency generation.
//!
//! The pipeline runs pump preparation ([`pumpprep`]) → pair generation
//! ([`spdc`]) → chirped upconversion ([`upconvert`]) → state tomography
//! ([`tomography`]) with the metrics in [`qmetrics`]; [`demuxsim`] ties the
//! stages into complete scenarios. Spectral primitives live in [`spectral`].

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod demuxsim;
mod error;
pub mod pumpprep;
pub mod qmetrics;
pub mod spdc;
pub mod spectral;
pub mod tomography;
pub mod upconvert;

pub use error::{Error, Result};
