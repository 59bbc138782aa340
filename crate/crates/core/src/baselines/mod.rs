//! First-order and quasi-Newton comparison methods on the same fabric.

mod agd;
mod dane;
mod grid;
mod lbfgs;
mod svrg;

pub use agd::{run_agd, AgdConfig, AgdSolver};
pub use dane::{run_dane, DaneConfig, DaneLocalSolver, DaneSolver, DaneSubproblem};
pub use grid::{agd_grid, by_final_objective, grid_search, GridSearch, AGD_MOMENTUM_GRID, AGD_STEP_GRID, SVRG_EPOCH_GRID, SVRG_STEP_GRID};
pub use lbfgs::{run_lbfgs, two_loop_direction, LbfgsConfig, LbfgsSolver};
pub use svrg::{svrg_minimize, FiniteSum, SvrgConfig};
