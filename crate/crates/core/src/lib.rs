//! Motivated reasoning and policy inaction in a two-candidate election.
//!
//! The numerical layer (`model`, `beliefs`, `voting`, `costly`,
//! `equilibrium`) is generic over the scalar type; the aliases below fix it
//! to `f64` or `f32`. The Monte-Carlo `harness` and the CLI run in `f64`.

pub mod beliefs;
pub mod cli;
pub mod costly;
pub mod equilibrium;
pub mod harness;
pub mod kv;
pub mod model;
pub mod scalar;
pub mod voting;

pub use scalar::Scalar;

pub type Params = model::ModelParams<f64>;
pub type Params32 = model::ModelParams<f32>;
pub type Distortion = beliefs::Distortion<f64>;
pub type Distortion32 = beliefs::Distortion<f32>;
pub type Cost = costly::CostSpec<f64>;
pub type Cost32 = costly::CostSpec<f32>;
pub type Kappa = voting::KappaProfile<f64>;
pub type Kappa32 = voting::KappaProfile<f32>;
pub type Shares = voting::VoteShares<f64>;
pub type Shares32 = voting::VoteShares<f32>;
