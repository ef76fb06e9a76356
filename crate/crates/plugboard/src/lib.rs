//! A calculus of computable functions and functionals over typed port graphs.
//!
//! Functions are boards of sockets (inputs) and plugs (outputs); composition
//! is directed link creation between leaf ports. Higher-order functionals
//! (application, composition gadgets, copy, iteration, the primitive-recursion
//! iterator) are realized as graph constructions that elaborate down to
//! first-order circuits of primitive boards. Naturals are 1-based and, at the
//! signal level, encoded as unary spike bursts.

pub mod cli;
pub mod eval;
pub mod functionals;
pub mod netgraph;
pub mod oracle;
pub mod primitives;
pub mod program;
pub mod selftest;
pub mod spikecodec;
pub mod types;
