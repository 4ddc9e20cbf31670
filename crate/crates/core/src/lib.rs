//! Build-verifiability toolkit for JVM deliverable packages.
//!
//! Compares two independently built packages, classifies every difference
//! against a fixed taxonomy of non-determinism patterns, removes the
//! interpretable ones by transparent post-processing, and reports a verdict.

pub mod archive;
mod bytes;
pub mod classfile;
pub mod diff;
pub mod digest;
pub mod fixtures;
pub mod normalize;
pub mod patterns;
pub mod textformats;
pub mod verify;
