//! Switched sources, channel-model equivalence and local-model membership.

pub mod behavior;
pub mod equivalence;
pub mod lhv;
pub mod source;

pub use behavior::Behavior;
pub use equivalence::{convert_model_b_to_a, embed_model_a_in_b, Conversion};
pub use lhv::{lhv_membership, LhvResult};
pub use source::{attack_example, marginal_constraint_defect, AttackDemo, SwitchSource};
