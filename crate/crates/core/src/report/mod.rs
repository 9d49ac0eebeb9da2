//! Output side: transcripts, records, campaign statistics and calibration.

pub mod calibrate;
pub mod records;
pub mod stats;
pub mod text;

pub use records::{dump_record, parse_record, TraceRecord, SCHEMA_VERSION};
pub use stats::{classify_stats, CampaignStats, Technique, TunnelClass};
pub use text::dump_text;
