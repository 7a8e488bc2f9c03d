//! The guide in `book/src`, compiled as doc-tests so its snippets keep
//! working. Run with `cargo test -p kgqa-book`.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/understanding.md")]
pub mod understanding {}

#[doc = include_str!("../../../book/src/graphs.md")]
pub mod graphs {}

#[doc = include_str!("../../../book/src/affinity.md")]
pub mod affinity {}

#[doc = include_str!("../../../book/src/linking.md")]
pub mod linking {}

#[doc = include_str!("../../../book/src/planning.md")]
pub mod planning {}

#[doc = include_str!("../../../book/src/execution.md")]
pub mod execution {}

#[doc = include_str!("../../../book/src/evaluation.md")]
pub mod evaluation {}

#[doc = include_str!("../../../book/src/service.md")]
pub mod service {}
