pub mod cli;
pub mod exact_linalg;
pub mod forms;
pub mod hulsbergen;
pub mod jump_surface;
pub mod poncelet;
pub mod quadric_geom;
