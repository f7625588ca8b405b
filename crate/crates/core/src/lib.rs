//! Simulator for comparison machines whose primitive fully orders up to `k`
//! items in one step.
//!
//! [`machine`] defines the primitive and its [`CostLedger`]. [`algorithms`]
//! builds selection and sorting on top of it, [`oracle`] provides binary
//! baselines to check them against, and [`physics`] and [`energy`] model two
//! physical devices of the same kind. [`cli`] drives experiments.

pub mod algorithms;
pub mod cli;
pub mod energy;
pub mod error;
pub mod machine;
pub mod oracle;
pub mod physics;

pub use algorithms::{
    find_min, find_min_max, principle_of_observability, sort_k, speedup, speedup_on,
    PredictedInvocations, Principle, SelectionResult, SortResult, Task,
};
pub use energy::{
    charge_energy, distributed_energy, total_energy, DistributedEnergy, EnergySchedule,
};
pub use error::{Error, Result};
pub use machine::{
    batch_round, k_compare, ComparisonOutcome, CostLedger, KComparator, ObservabilityOrder,
};
pub use physics::{
    charge_sort, deflection, DeflectionMode, DeflectionRecord, FieldConfig, Particle, SortedCharges,
};
