//! SO(3) machinery: Clebsch-Gordan tables and Wigner-D representations.

pub mod cg;
pub mod wigner;

pub use cg::{
    cg_complex, cg_real, clebsch_gordan, real_change_of_basis, real_table, Basis, CGTable, CgEntry, SparsityStats,
    TableCache,
};
pub use wigner::{wigner_d, Rotation, WignerRep};
