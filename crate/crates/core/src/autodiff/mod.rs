//! Reverse-mode differentiation over dense row-major matrices. Complex
//! quantities are carried as separate real and imaginary nodes.

mod tape;

pub use tape::{Gradients, Matrix, Tape, Var};
