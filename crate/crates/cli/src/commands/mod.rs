pub mod algebra;
pub mod grid;
pub mod invert;
