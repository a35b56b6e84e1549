//! Implementations of the six subcommands. Each takes a parsed config plus
//! flag overrides and returns the run directory it populated.

pub mod build_partial;
pub mod compare;
pub mod decode;
pub mod eval_ar;
pub mod synth;
pub mod train;
