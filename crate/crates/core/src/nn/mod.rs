//! Laplace operator network: configuration, parameters, constant domain
//! maps, forward pass and checkpoints.
mod checkpoint;
mod config;
mod context;
mod gradcheck;
mod model;
mod params;

pub use checkpoint::{
    config_digest, read_checkpoint, write_checkpoint, Checkpoint, CHECKPOINT_MAGIC,
    CHECKPOINT_VERSION,
};
pub use config::{DomainKind, NetworkConfig, TaskKind, GEO_FEATURES};
pub use context::{Domain, GridContext, MeshContext};
pub use gradcheck::{
    gradcheck, parameter_group, relative_deviation, GradcheckReport, GRADCHECK_FLOOR,
};
pub use model::{Glno, ParamVars};
pub use params::{lr_schedule, AdamConfig, ParameterStore};
