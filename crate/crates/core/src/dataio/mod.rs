//! Dataset ingestion, canonical dataset files, splits and synthetic
//! generators.

pub mod car;
mod dataset;
pub mod features;
pub mod mm;
mod split;
pub mod synth;

pub use car::{car_dataset, load_car, CarChoiceRecord, CarData, CarLoadStats};
pub use dataset::{file_sha256, Dataset, DatasetMeta, Record, Task, DATASET_FORMAT, DATASET_VERSION};
pub use features::{featurize, FeatureSpec, Features, InputKind};
pub use mm::{load_mm, mm_dataset, MmLoadStats, MmScenarioPair};
pub use split::{split, split_indices, DatasetSplit, SplitSpec};
pub use synth::{synth_clustered, synth_interaction, synth_linear, InteractionKind, SchemaFile};
