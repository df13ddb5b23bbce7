//! Optimal data-aware alignments between event logs and data Petri nets,
//! computed by reduction to SMT over linear integer/rational arithmetic.

pub mod align;
pub mod cluster;
pub mod cost;
pub mod encode;
pub mod fixtures;
pub mod io;
pub mod log;
pub mod model;
pub mod oracle;
pub mod pipeline;
pub mod solver;
