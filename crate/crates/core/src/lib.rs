//! Floquet-Bloch band structure, Dirac points and the bifurcation of standing
//! waves of the cubic nonlinear Schrodinger equation from them.
//!
//! The pipeline, bottom to top:
//!
//! * [`bloch`]: plane-wave band structure of `-d^2/dx^2 + V(x)`.
//! * [`dirac`]: the crossing at `k = pi`, its Bloch basis and the effective
//!   coefficients `c_sharp`, `theta_sharp`, `beta1`, `beta2`; gap opening under `delta W`.
//! * [`nld`]: the homoclinic soliton of the effective nonlinear Dirac system and
//!   the kernel of its linearisation.
//! * [`multiscale`]: the two-scale ansatz `sqrt(delta)(U0 + delta U1)` and its residual.
//! * [`newton`]: Newton refinement to a discrete standing wave.
//! * [`pipeline`]: the command-line runs, with [`config`] and [`output`].

pub mod bloch;
pub mod config;
pub mod dirac;
pub mod error;
pub mod multiscale;
pub mod newton;
pub mod nld;
pub mod ode;
pub mod output;
pub mod pipeline;
pub mod potential;

pub use error::{Error, ErrorKind, Result};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/intro.md")]
pub mod book_intro {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/bloch.md")]
pub mod book_bloch {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/dirac.md")]
pub mod book_dirac {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/nld.md")]
pub mod book_nld {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/multiscale.md")]
pub mod book_multiscale {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/newton.md")]
pub mod book_newton {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
pub mod book_cli {}
