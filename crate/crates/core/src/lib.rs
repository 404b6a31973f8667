//! Preventive verification of SDN path requests.
//!
//! A request is a set of host-to-host paths. Installing one forwarding rule
//! per switch hop makes the network forward along every path that stitches
//! together pieces of the requested ones, so the network may implement more
//! than was asked for, or loop forever. This crate decides which of the three
//! happens before any rule is installed, and proposes repairs.

pub mod cli;
pub mod closure;
pub mod dot;
pub mod pathmodel;
pub mod repair;
pub mod rules;
pub mod topology;
