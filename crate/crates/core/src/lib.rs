//! Slot-level simulation of hybrid multiple access (HMA) for a single uplink
//! cell carrying saturated scheduled URLLC traffic and sporadic non-scheduled
//! URLLC arrivals over five radio resource blocks.
//!
//! Layering, bottom up: [`geometry_channel`] and [`phy_outage`] give the link
//! model, [`traffic_users`] and [`slicing_hma`] the population and the resource
//! partition, [`rl_core`] the tabular learner, [`agents`] the three decision
//! makers (provisioning, scheduling, power utilization), [`sim_engine`] the slot
//! loop, and [`cli_io`] configuration, presets and CSV output.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agents;
pub mod cli_io;
pub mod geometry_channel;
pub mod phy_outage;
pub mod rl_core;
pub mod sim_engine;
pub mod slicing_hma;
pub mod traffic_users;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}:{line}: key `{key}`: {msg}")]
    Parse {
        path: String,
        line: usize,
        key: String,
        msg: String,
    },
    #[error("i/o error on {path}: {msg}")]
    Io { path: String, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

/// Number of radio resource blocks in the cell.
pub const N_RRB: usize = 5;
