//! Runs every listing of the guide in `book/` as a doc-test.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/games.md")]
pub mod games {}

#[doc = include_str!("../../../book/src/quantum.md")]
pub mod quantum {}

#[doc = include_str!("../../../book/src/guessing.md")]
pub mod guessing {}

#[doc = include_str!("../../../book/src/repetition.md")]
pub mod repetition {}

#[doc = include_str!("../../../book/src/protocol.md")]
pub mod protocol {}

#[doc = include_str!("../../../book/src/bounds.md")]
pub mod bounds {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
