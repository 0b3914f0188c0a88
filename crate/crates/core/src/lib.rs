//! Exact simulation of measure-preserving circle maps and desk-scale
//! verification of shrinking-target statements.

pub mod diophantine;
pub mod exec;
pub mod experiments;
pub mod fixedpoint;
pub mod geometry;
pub mod maps;
pub mod qset;
pub mod rng;
pub mod sequences;
