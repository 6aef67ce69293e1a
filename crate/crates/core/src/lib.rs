pub mod arborescence;
pub mod graph;
pub mod instance_gen;
pub mod milp;
pub mod survivable;
