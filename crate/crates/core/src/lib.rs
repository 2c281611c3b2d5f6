//! Truck-and-drone routing: candidate-point expansion, penalty-guided
//! giant-tour search, and desk-scale exact enumeration for FSTSP, TSP-mD and
//! VRP-D, plus loop-allowed, waypoint and 1-m extensions.

pub mod bench;
pub mod candgen;
pub mod codec;
pub mod eval;
pub mod model;
pub mod oracle;
pub mod plangen;
pub mod search;
