//! Power-network models: Kron reduction, swing linearization, coherency
//! costs, stabilizer blocks and model files.

mod coherency;
pub mod model_file;
mod network;
mod plant;
mod pss;

pub use coherency::{
    aggregate_coherency, build_cost_average, build_cost_two_area, AggregateModel,
    CoherencyPartition, CostProvenance, CostSpec,
};
pub use model_file::{load_cost, load_network, load_plant, save_model, write_atomic, ModelFile};
pub use network::{
    kron_reduce, linearize_swing, linearize_swing_with, phase_shift, swing_laplacian,
    two_area_four_machine, B1Policy, Generator, PowerNetwork, SwingLaplacian, SwingOptions,
};
pub use plant::{LinearPlant, StateLabels};
pub use pss::{compose_pss, realize_pss, PssParams, StateSpace};
