pub mod chacon;
pub mod dynamics;
pub mod rational;
pub mod cocycle;
pub mod group;
pub mod lattice;
pub mod rng;
pub mod stats;
pub mod suspension;
pub mod joining;
pub mod verify;
pub mod cli;
