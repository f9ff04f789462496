//! Polynomial to three-address system compilation and solution counting.

pub mod cli;
pub mod ensystem;
pub mod fexplorer;
pub mod gadgets;
pub mod json_int;
pub mod polyalg;
pub mod reducer;
pub mod solver;
