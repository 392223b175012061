//! Invariant metrics on finite G-spaces.
//!
//! A metric on the orbit space `X/G` is lifted to a `G`-invariant metric on
//! `X` through a family of slices and an orbital metric built from a
//! left-invariant metric on `G`. Everything is finite and checked
//! exhaustively.

#![allow(clippy::needless_range_loop)]

pub mod graph;
pub mod gspace;
pub mod metric;
pub mod quotient;
pub mod scenario;
pub mod slices;
pub mod orbital;
pub mod lift;
pub mod verify;
pub mod pipeline;

// The guide's snippets run as doc-tests, one module per chapter.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/gspaces.md")]
    mod gspaces {}
    #[doc = include_str!("../../../book/src/quotient.md")]
    mod quotient {}
    #[doc = include_str!("../../../book/src/slices.md")]
    mod slices {}
    #[doc = include_str!("../../../book/src/orbital.md")]
    mod orbital {}
    #[doc = include_str!("../../../book/src/lifting.md")]
    mod lifting {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
