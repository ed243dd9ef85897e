//! Offline datasets: step records grouped into episodes, the canonical text
//! format, uniform transition sampling, and K-step sequence windows.

mod dataset;
pub mod io;
mod sampling;

pub use dataset::{Dataset, StepRecord, Transition};
pub use io::{format_dataset, parse_dataset, read_dataset, write_dataset};
pub use sampling::{count_full_windows, sample_batch, sample_indices, sample_sequences, SequenceWindow};
