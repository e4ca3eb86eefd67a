pub mod census;
pub mod exact;
pub mod group;
pub mod lattice;
pub mod stg;
pub mod toroid;
