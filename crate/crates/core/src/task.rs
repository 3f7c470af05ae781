//! Synthesis tasks: a grammar plus input-output examples.

use crate::ast::{Grammar, Sort};
use crate::semantics::ExampleSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Logic {
    Strings,
    Bitvectors,
}

#[derive(Clone, Debug)]
pub struct SynthesisTask {
    pub fn_name: String,
    pub logic: Logic,
    pub grammar: Grammar,
    pub examples: ExampleSet,
}

impl SynthesisTask {
    pub fn output_sort(&self) -> Sort {
        self.examples.output_sort
    }

    /// Bitvector width, if the output is a bitvector.
    pub fn width(&self) -> Option<u32> {
        match self.output_sort() {
            Sort::BitVec(w) => Some(w),
            _ => None,
        }
    }
}
