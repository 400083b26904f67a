//! Inexact proximal alternating direction solver for two-block nonconvex,
//! nonsmooth problems `min f(x) + g(y) + H(x, y)`, with an ℓ0 sparse
//! dictionary learning model, baseline algorithms and a data harness for
//! synthetic and image-denoising experiments.

pub mod baselines;
pub mod data;
pub mod error;
pub mod framework;
pub mod inner;
pub mod linalg;
pub mod sdl;

pub use error::{IpadError, Result};
