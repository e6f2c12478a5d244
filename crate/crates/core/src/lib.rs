//! Exact simulation laboratory for the (h,k)-server problem on
//! bounded-depth trees: online algorithms, work functions, a potential
//! based competitive-ratio verifier and lower-bound adversaries, all in
//! exact rational arithmetic.

pub mod adversary;
pub mod algebraic;
pub mod algo;
pub mod error;
pub mod harness;
pub mod interval;
pub mod matching;
pub mod motion;
pub mod potential;
pub mod rational;
pub mod tree;
pub mod workfunction;

pub use algebraic::AlgNum;
pub use error::{Error, Result};
pub use interval::RatInterval;
pub use rational::{fmt_decimal, fmt_rat, parse_rat, rat, rint, rusize, Rat};
pub use tree::{HstSpec, NodeId, PointLocation, TreeFile, TreeMetric};
