//! Clebsch-Gordan attention kernels for SO(3)-equivariant token features.
//!
//! The crate covers the pieces of an equivariant long-convolution attention
//! layer: packed irreducible features ([`irreps`]), Clebsch-Gordan tables and
//! Wigner-D matrices ([`so3`]), sparse tensor products ([`tensor_product`]),
//! FFT long convolution over tokens ([`conv`]), the full attention block
//! ([`attention`]), a permutation-equivariant graph-spectral variant
//! ([`spectral`]), brute-force references ([`oracles`]) and the benchmark
//! harness behind the `cgbench` binary ([`bench`]).

pub mod attention;
pub mod bench;
pub mod conv;
pub mod error;
pub mod irreps;
pub mod oracles;
pub mod so3;
pub mod spectral;
pub mod tensor_product;

pub use error::{Error, Result};
pub use irreps::{make_signature, ComplexFeature, EquivariantFeature, IrrepsSignature};
