//! The allocation method family: geometric wrench inversion, weighted
//! differential allocation and limit-normalized differential allocation.

pub mod differential;
pub mod geometric;
pub mod normalized;
