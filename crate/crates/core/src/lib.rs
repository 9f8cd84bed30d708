//! Energy-efficiency / spectral-efficiency tradeoff for full-duplex small cells.
//!
//! * [`channel`]: user drops, path loss, shadowing and normalized CNRs.
//! * [`pair`]: closed-form minimum power of one FD user pair.
//! * [`multi`]: minimum total power with time sharing over all pairs.
//! * [`tradeoff`]: EE-SE curves and the EE-maximizing SE.
//! * [`oracle`]: brute-force checks used by the tests.
//! * [`harness`]: experiment presets, aggregation and CSV/JSON output.

// `!(x > 0.0)` style checks are meant to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod harness;
pub mod matrix;
pub mod multi;
pub(crate) mod numeric;
pub mod oracle;
pub mod pair;
pub mod tradeoff;

pub use error::{Error, Result};
