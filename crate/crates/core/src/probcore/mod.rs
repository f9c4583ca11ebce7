//! Exact finite-alphabet probability objects and information measures.

mod alphabet;
mod induced;
pub mod io;
mod joint;
mod mechanism;
pub mod measures;
mod triple;

pub use alphabet::Alphabet;
pub use induced::{induce, InducedJoint, RECONSTRUCTION_TOL};
pub use joint::JointDistribution;
pub use measures::{
    binary_entropy, conditional_entropy, conditional_mutual_information, entropy, kl_divergence,
    l1_distance, mutual_information, total_variation, JointEntropy, Var,
};
pub use mechanism::{Mechanism, MechanismKind};
pub use triple::TripleDistribution;
