//! Toxic span detection toolkit.
//!
//! Predictions and gold annotations are sets of character offsets into the
//! original post ([`CharIndexSet`]). The crate provides the offset algebra
//! and the character Dice F1 ([`span`]), dataset loaders ([`corpus`]),
//! random and keyword taggers ([`baselines`]), attention-score span
//! selection and a CART selector ([`attn`]), a linear-chain CRF tagger
//! ([`crf`]), output ensembling ([`ensemble`]) and a cross-validation
//! harness ([`harness`]).

pub mod attn;
pub mod baselines;
pub mod corpus;
pub mod crf;
pub mod ensemble;
pub mod error;
pub mod harness;
pub mod hash;
pub mod predictions;
pub mod span;

pub use error::{Error, Result};
pub use span::{CharIndexSet, CharSpan, Label, Token};
