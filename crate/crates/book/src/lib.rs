//! The guide in `book/src`, one module per chapter. Its code listings run
//! as doc-tests, which keeps them in step with the library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/random-features.md")]
pub mod random_features {}

#[doc = include_str!("../../../book/src/operator-model.md")]
pub mod operator_model {}

#[doc = include_str!("../../../book/src/training.md")]
pub mod training {}

#[doc = include_str!("../../../book/src/data-generation.md")]
pub mod data_generation {}

#[doc = include_str!("../../../book/src/benchmarks.md")]
pub mod benchmarks {}
