//! Complete indoor scene models from one depth image: axis-aligned layout
//! planes plus posed object meshes chosen from a candidate pool.
//!
//! [`pipeline`] chains the stages over scene files; each stage also stands
//! alone in its module.

// `!(x >= lo)` is used on purpose: it rejects NaN along with small values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod alignment;
pub mod composition;
pub mod config;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod io;
pub mod kdtree;
pub mod layout;
pub mod pipeline;
pub mod synth;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/geometry.md")]
    struct Geometry;
    #[doc = include_str!("../../../book/src/alignment.md")]
    struct Alignment;
    #[doc = include_str!("../../../book/src/layout.md")]
    struct Layout;
    #[doc = include_str!("../../../book/src/composition.md")]
    struct Composition;
    #[doc = include_str!("../../../book/src/evaluation.md")]
    struct Evaluation;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}
