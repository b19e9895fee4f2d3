//! Mining app-store reviews for user-reported harassment.
//!
//! The pipeline runs: [`corpus`] ingestion and filtering, [`expansion`] of the
//! app set, keyword seeding via [`lexicon`], the two-head [`classifier`]
//! refined by [`active_learning`], then [`emotion`] and [`gender`] analysis
//! and per-app [`report`]s.

pub mod active_learning;
pub mod classifier;
pub mod corpus;
pub mod expansion;
pub mod emotion;
pub mod external;
pub mod fixtures;
pub mod gender;
pub mod lexicon;
pub mod report;
pub mod summary;
pub mod text;
