//! Exact solvers, plan checkers and a dispatch simulator for single-vehicle
//! same-day delivery models.

pub mod error;
pub mod compare;
pub mod dynamics;
pub mod generator;
pub mod geometry;
pub mod instance;
pub mod metrics;
pub mod oracle;
pub mod plan;
pub mod solver;
pub mod tsp;

pub use error::{Result, SddError};
pub use geometry::{distance_matrix, feasible_stations, DistanceMatrix, Location};
pub use instance::{Instance, OptionSet, Order, ReleaseDist, Station, ValidInstance};
pub use metrics::{compute_metrics, MetricsReport};
pub use plan::{eval_objective, validate_plan, Assignment, ModelKind, Plan, Trip, Violation, EPS};
pub use solver::{solve_f1, solve_f2, solve_f2_lex, solve_f3, solve_f4, solve_slots, SlotSolution, SolveReport, SolverConfig};
pub use tsp::{tsp_exact, Tour};
pub use oracle::{oracle_solve, oracle_solve_with_trips, OracleGuard};
pub use dynamics::{run_episode, simulate, Policy, SimConfig, SimReport};
pub use generator::{generate, GeneratorProfile};
pub use compare::{compare, CompareRow};
