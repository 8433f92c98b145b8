//! Data ingestion, case configuration and report emission.

mod case;
mod csv;
pub mod report;

pub use case::{parse_case_config, CaseBundle, CaseConfig, ParamSection};
pub use csv::{
    assemble_traces, parse_frequencies, parse_peaks, parse_profiles, write_frequencies,
    write_peaks, write_profiles, RawPeak,
};
