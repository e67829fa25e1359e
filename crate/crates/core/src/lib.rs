//! Experience-driven content adaptation for arachnophobia exposure.
//!
//! Spiders are six ordinal attributes. A virtual subject maps each spider to
//! a stress level in [0, 10]. Policies (tabular Q-learning with zero or
//! random initialization, a genetic algorithm, greedy search and a random
//! walk) edit the spider until its stress matches a target level, and the
//! harness counts how many distinct spiders each policy had to show.

pub mod domain;
pub mod error;
pub mod grid;
pub mod policies;
pub mod report;
pub mod reward;
pub mod seed;
pub mod session;
pub mod stats;
pub mod subjects;

pub use domain::{Action, AttributeSpec, Direction, SpiderState};
pub use error::{DomainError, GridError, RewardError, SessionError, StatsError, SubjectError};
pub use grid::{run_grid, summarize, CellSummary, Execution, GridConfig, RunRecord};
pub use policies::{GAConfig, Method, RLConfig};
pub use reward::RewardSpec;
pub use session::{run_session, InitialKind, RunConfig, RunResult};
pub use subjects::{generate_population, SubjectPopulation, VirtualSubject};
