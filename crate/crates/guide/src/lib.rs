//! Doctests for the guide. Each chapter of `book/src` is a module here so
//! `cargo test --doc` compiles and runs its snippets.

#[cfg(doctest)]
mod chapters {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/spectral.md")]
    mod spectral {}
    #[doc = include_str!("../../../book/src/nonlinearity.md")]
    mod nonlinearity {}
    #[doc = include_str!("../../../book/src/flow.md")]
    mod flow {}
    #[doc = include_str!("../../../book/src/equilibria.md")]
    mod equilibria {}
    #[doc = include_str!("../../../book/src/conley.md")]
    mod conley {}
    #[doc = include_str!("../../../book/src/branch.md")]
    mod branch {}
    #[doc = include_str!("../../../book/src/runner.md")]
    mod runner {}
}
