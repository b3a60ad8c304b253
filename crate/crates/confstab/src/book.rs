//! Keeps the guide honest: every chapter of `book/` is attached as a doc
//! comment here, so `cargo test --doc` compiles and runs its snippets.

#[doc = include_str!("../../../book/src/introduction.md")]
mod introduction {}

#[doc = include_str!("../../../book/src/charts-and-fields.md")]
mod charts_and_fields {}

#[doc = include_str!("../../../book/src/curvature.md")]
mod curvature {}

#[doc = include_str!("../../../book/src/hypersurfaces.md")]
mod hypersurfaces {}

#[doc = include_str!("../../../book/src/conformal-rescaling.md")]
mod conformal_rescaling {}

#[doc = include_str!("../../../book/src/stability-constants.md")]
mod stability_constants {}

#[doc = include_str!("../../../book/src/ellipsoid.md")]
mod ellipsoid_example {}

#[doc = include_str!("../../../book/src/cli.md")]
mod cli {}
