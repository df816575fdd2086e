//! Validation, inversion, substitution and quality measurement of square
//! substitution boxes.
//!
//! A table is loaded from comma-separated text ([`parse_sbox`]), checked for
//! completeness and non-contradiction, and then measured three ways:
//!
//! * [`independence`]: static and dynamic bit-independence tests built on the
//!   plug-in entropy engine in [`infotheory`];
//! * [`spectral`]: difference distribution, linear approximation and
//!   avalanche profiles;
//! * [`report`]: the full suite, serialized as text or JSON and compared with
//!   the AES table in [`aes`].

pub mod aes;
mod error;
pub mod independence;
pub mod infotheory;
pub mod report;
pub mod sbox;
pub mod spectral;
pub mod substitution;

pub use error::{Error, Result};
pub use independence::{
    dyn_io, dyn_oi, dyn_oo, enumerate_masks, make_difference_stream, run_test, stat_io, stat_oi, stat_oo, BitMask,
    IndependenceResult, MaskRecord, Mode, PairedStreams, StreamPair, TestConfig, TestData, TestKind,
};
pub use report::{
    emit_report, run_checks, run_full_suite, BaselineFixture, CriterionReport, Format, SuiteConfig, SuiteData,
};
pub use sbox::{
    check_completeness, check_non_contradiction, invert_sbox, parse_sbox, serialize_sbox, BitPermutation, CellRef, SBox,
};
pub use spectral::{compute_avalanche, compute_ddt, compute_lat, AvalancheMatrix, Ddt, Lat};
pub use substitution::{apply_stream, unapply_stream, ByteSubstitution};
