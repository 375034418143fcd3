//! Score-to-score toolkit for melodies in ABC notation.
//!
//! The crate is organised around one data flow:
//!
//! 1. [`abc`] parses ABC text into a lossless token representation and
//!    provides the score transforms (chord stripping, rest conversion,
//!    section detection) the task builders need.
//! 2. [`curation`] cleans a directory of raw `.abc` files into a uniform,
//!    deduplicated corpus.
//! 3. [`tasks`] turns curated tunes into input/output training pairs for
//!    seven score-to-score tasks and writes them as JSONL.
//! 4. [`patching`] converts score text to and from bar patches, the unit
//!    the model operates on.
//! 5. [`model`] is a hierarchical patch/character encoder-decoder with a
//!    from-scratch training loop, sampling, and binary checkpoints.
//! 6. [`metrics`] scores model output: bits-per-byte plus task-specific
//!    controllability, harmonicity, and segmentation metrics.
//!
//! Everything is deterministic under a fixed seed, including the
//! data-parallel paths (see [`par`]).

pub mod abc;
pub mod curation;
pub mod metrics;
pub mod model;
pub mod par;
pub mod patching;
pub mod tasks;

/// Exact note/rest duration in units of the tune's `L:` field.
pub type Dur = num_rational::Ratio<i64>;
