//! Finite-scale rigidity of uniform Roe algebras.
//!
//! A `*`-isomorphism between the uniform Roe algebras of two spaces is
//! implemented by a unitary `u`. This crate truncates everything to finite
//! metric spaces and dense matrices, then recovers a bijective coarse
//! equivalence from `u`: support sets of `Φ = Ad(u)` give set-valued maps,
//! Hall's theorem turns them into injections both ways, and the
//! Cantor–Schröder–Bernstein chain argument glues those into a bijection.
//!
//! ```
//! use std::sync::Arc;
//! use roe_core::iso::SpatialIsomorphism;
//! use roe_core::rigidity::{extract, ExtractParams};
//! use roe_core::space::{generators, CoarseMap};
//!
//! let p5 = Arc::new(generators::path(5).unwrap());
//! let flip = CoarseMap::from_fn(p5.clone(), p5.clone(), |x| 4 - x).unwrap();
//! let iso = SpatialIsomorphism::from_bijection(&flip, None).unwrap();
//!
//! let cert = extract(&iso, &ExtractParams::fixed(0.5, 0.0)).unwrap();
//! assert_eq!(cert.h, flip);
//! assert_eq!(cert.goal_residual(), 0.0);
//! ```

pub mod error;
pub mod files;
pub mod functions;
pub mod iso;
pub mod operator;
pub mod rigidity;
pub mod selftest;
pub mod space;

pub use error::{Error, Result};

// The guide's chapters run as doctests so their snippets cannot rot.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/spaces.md")]
    mod spaces {}
    #[doc = include_str!("../../../book/src/operators.md")]
    mod operators {}
    #[doc = include_str!("../../../book/src/isomorphisms.md")]
    mod isomorphisms {}
    #[doc = include_str!("../../../book/src/extraction.md")]
    mod extraction {}
    #[doc = include_str!("../../../book/src/goal.md")]
    mod goal {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
