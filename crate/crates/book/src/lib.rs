//! The guide in `book/` cannot run its own listings against this workspace,
//! so every chapter is pulled in here and checked by `cargo test --doc`.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/model.md")]
pub mod model {}
#[doc = include_str!("../../../book/src/auxiliary.md")]
pub mod auxiliary {}
#[doc = include_str!("../../../book/src/contraction.md")]
pub mod contraction {}
#[doc = include_str!("../../../book/src/oracle.md")]
pub mod oracle {}
#[doc = include_str!("../../../book/src/observables.md")]
pub mod observables {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
