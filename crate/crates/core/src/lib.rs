pub mod bregman_fit;
pub mod convex_fit;
pub mod dc_fit;
pub mod error;
pub mod model;
pub mod numerics;
pub mod tuner;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/convex.md")]
    mod convex {}
    #[doc = include_str!("../../../book/src/dc.md")]
    mod dc {}
    #[doc = include_str!("../../../book/src/bregman.md")]
    mod bregman {}
    #[doc = include_str!("../../../book/src/tuning.md")]
    mod tuning {}
    #[doc = include_str!("../../../book/src/models.md")]
    mod models {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
