//! Tools for judging online play in two-player zero-sum imperfect-information
//! games.
//!
//! The crate covers the game formalism ([`fosg`]), exact best responses and
//! exploitability ([`equilibrium`]), regret-minimizing solvers ([`solvers`]),
//! stateful online algorithms and their tabularization ([`online`]),
//! repeated-game play with exact worst-case adversaries ([`arena`]), audits
//! of local, global and strong global consistency ([`consistency`]), and the
//! biased-search experiments ([`experiment`]).

pub mod arena;
pub mod consistency;
pub mod equilibrium;
pub mod experiment;
pub mod error;
pub mod fosg;
pub mod games;
pub mod online;
pub mod solvers;
pub mod strategy;
pub mod tree;

pub use error::{Error, Result};
pub use fosg::{Game, History, InfoKey, InfoState, Player};
pub use strategy::BehavioralStrategy;
pub use tree::GameTree;
