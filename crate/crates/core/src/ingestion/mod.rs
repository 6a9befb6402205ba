//! Raw tracker exports to processed event sequences.
//!
//! The pipeline per participant: parse the CSV, screen for unreliable
//! pressing, deduplicate button presses, cut the timeline into four-day sequences,
//! learn min-max normalization on the training days, and build the static and
//! time-varying features.

mod pipeline;
mod presses;
mod profile;
mod raw;
mod screening;
mod split;
mod track;

pub use pipeline::{preprocess, ParticipantInput, PreprocessConfig, PreprocessOutput, ScreeningRecord, SequenceKey};
pub use presses::dedup_presses;
pub use profile::{encode_static, load_profiles, Category, HomeLocation, ParticipantProfile, PROFILE_OPTIONS};
pub use raw::{read_tracker_csv, RawTrackerRecord, RowDiagnostic, CSV_HEADER};
pub use screening::{screen_participant, ScreeningTest, ScreeningVerdict, SCREENING_ALPHA};
pub use split::{sequence_windows, split_train_test, SplitLayout};
pub use track::{
    build_feature_track, haversine_m, learn_normalization, raw_feature_vector, DistanceSource,
    Normalization, NormalizationStats,
};
