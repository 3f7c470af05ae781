//! Bottom-up enumerative synthesis from input-output examples over strings and
//! bitvectors, with search spaces pruned and factorized by oriented metrics.

pub mod ast;
pub mod deduce;
pub mod enumerate;
pub mod frontend;
pub mod metric;
pub mod sample;
pub mod semantics;
pub mod solver;
pub mod space;
pub mod task;
