//! Episode runner, suites, scene generation, dataset collection and the
//! run configuration behind the command-line tool.

pub mod collect;
pub mod config;
pub mod episode;
pub mod scenegen;
pub mod suite;
pub mod train;
pub mod transcript;

pub use collect::{collect_refiner_dataset, move_sequences, CollectMove, CollectParams, Dataset, RecordedFrame, RecordedSequence};
pub use config::{RunConfig, SemanticBackend};
pub use episode::{derive_seed, replay_map, run_episode, EpisodeOutput};
pub use train::{train_refiner, TrainOutcome};
pub use transcript::{Transcript, TranscriptRow};
pub use scenegen::{gen_episodes, gen_scene, gen_suite, GenParams, GeneratedSuite, SuiteParams};
pub use suite::{load_scene_dir, run_suite, RunSummary, Suite};
