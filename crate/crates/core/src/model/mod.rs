//! Data Petri nets: values, guards, nets and their firing semantics.

pub mod dpn;
pub mod guard;
pub mod reach;
pub mod value;

pub use dpn::{
    eval_guard, Assignment, Beta, Dpn, DpnBuilder, Firing, Label, LabelPolicy, Marking, ModelError, Place,
    ProcessRun, State, Transition, VarDecl,
};
pub use guard::{Ann, AnnVar, CmpOp, Expr, Guard, GuardError};
pub use reach::{reachable_transition_sets, shortest_final_distance, ExplorationLimits, ReachableSets};
pub use value::{Sort, Value};
