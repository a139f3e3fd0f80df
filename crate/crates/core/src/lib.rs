pub mod cli;
pub mod fields;
pub mod flow;
pub mod frequency;
pub mod functionals;
pub mod grid;
pub mod liealg;
pub mod limits;
pub mod synth;
