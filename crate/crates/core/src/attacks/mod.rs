//! Eavesdropping strategies: intercept-resend with free measurement bases and
//! the entanglement-enhanced attack on the star gates.

mod entangled;
mod intercept;

pub use entangled::{ee_attack, ee_attack_2, ee_attack_3, EEAttackSpec, EEBranch, PauliFrame};
pub use intercept::{apply_fraction, ir_branches, AttackSpec, IrBranch, IrEvaluator, QubitAttack};
