//! Wardrop equilibria of nonatomic congestion games: potential minimization,
//! monotone equilibrium selection, singleton-game structure, game algebra and
//! monotonicity diagnostics.

pub mod compose;
pub mod cost;
pub mod diagnostics;
pub mod error;
pub mod fixtures;
pub mod game;
pub mod jsonfmt;
mod par;
pub mod singleton;
pub mod solver;

pub use cost::CostFunction;
pub use error::{Error, Result};
pub use game::{
    load_from_flow, strategy_cost, validate_game, Commodity, CommodityDef, CongestionGame, DemandVector,
    FlowProfile, GameDef, LoadProfile, Resource, Strategy, Violation,
};
pub use solver::{
    dual_value, solve_beckmann, solve_beckmann_from, solve_mes, verify_wardrop, EquilibriumReport, Selection,
    SolverConfig,
};
