//! Oracle-driven constructions of maximal subfamilies with the `F` property.

pub mod greedy;
pub mod hyperimmune;
pub mod permitting;

pub use greedy::{chosen, solve_greedy, solve_greedy_with, ForcingCondition, GreedyOutcome, JumpHook, NoJump};
pub use hyperimmune::{compute_g, solve_hyperimmune, DominationOracle, HyperimmuneOutcome};
pub use permitting::{
    audit_permitting, cantor_pair, cantor_unpair, solve_permitting, CeEnumeration, PermittingAudit,
    PermittingOutcome, PermittingState,
};
