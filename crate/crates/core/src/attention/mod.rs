//! The equivariant attention layer: channel-mixing projections, invariant
//! gating and the block that composes them with the long convolution.

pub mod block;
pub mod gate;
pub mod linear;

pub use block::{stack, stack_configs, Block, BlockConfig, BlockParams, GatingMode, PARAM_GROUPS};
pub use gate::{apply_gate, gate_values, GateNetwork};
pub use linear::EquivariantLinear;
