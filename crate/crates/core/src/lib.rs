//! Simulation library for a multi-BS mmWave downlink assisted by an
//! intelligent reflecting surface.
//!
//! The pipeline joins three pieces: synthesized geometric channels
//! ([`channel`]), discrete passive-beamforming optimization by fractional
//! programming ([`irs_opt`]), and auction-based user association over a
//! min-cost-flow reformulation ([`assoc`]). The [`engine`] module runs the
//! alternating loop, the reference pipelines, and paired Monte-Carlo
//! sweeps; [`phy`] supplies zero-forcing precoding and rate arithmetic, and
//! [`numerics`] the small complex linear algebra and the fixed random
//! generator underneath it all.

pub mod assoc;
pub mod channel;
pub mod engine;
pub mod irs_opt;
pub mod numerics;
pub mod phy;

pub use assoc::{auction_associate, epsilon_cs_check, exact_oracle, AssocError, AuctionState};
pub use channel::{ChannelError, ChannelSet, ConfigError, ScenarioConfig};
pub use engine::{
    monte_carlo, run_alternating, run_baseline, sweep, EngineError, IterationTrace, Method,
    MethodStats, SweepParam, SweepResult,
};
pub use irs_opt::{optimize_phases, IrsOptError, PhaseOptResult, PhaseVector};
pub use numerics::{CMat, NumericsError, Rng};
pub use phy::{AssociationMap, PhyError, PrecoderSet, RateMatrix, RateReport};
