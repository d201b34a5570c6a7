//! Static triage of Android fraud-app samples.
//!
//! The pipeline runs bottom-up: [`apk`] parses the container, [`genscan`]
//! recognizes app-generator output, [`extract`] produces association
//! features, [`assoc`] clusters samples by developer, [`payclass`] labels
//! payment sessions, and [`taxonomy`] plus [`report`] aggregate labelled
//! corpora into tables.

pub mod apk;
pub mod assoc;
pub mod extract;
pub mod genscan;
pub mod payclass;
pub mod pipeline;
pub mod report;
pub mod rounding;
pub mod taxonomy;
