//! Functional model of a variational-inference BNN accelerator: RAM-based
//! LFSR and Wallace Gaussian generators, fixed-point PE emulation, Bayes by
//! Backprop training and the statistics used to judge the generators.

pub mod bnn;
pub mod cli;
pub mod data;
pub mod fxp;
pub mod grng;
pub mod io;
pub mod rlf;
pub mod stats;
pub mod train;
pub mod wallace;
