//! Certified bounds on the error between a fixed-point program and the real
//! computation it implements.

mod lp;
mod milp;
mod node;
mod oracle;

pub use lp::{solve_lp, Constraint, LinearProgram, LpSolution, LpStatus, Relation, Sense, VarId, Variable};
pub use milp::{solve_milp, MilpSolution, MilpStatus, GAP_TOLERANCE, INTEGRALITY_TOLERANCE, NODE_CAP};
pub use node::{
    affine_node_bound, affine_program_bounds, bound_node_error, bound_program_error, build_op_milp,
    euclidean_norm, representation_error, BoundMethod, Certificate, Direction, ErrorBound,
    ProgramErrorBound, SignCase,
};
pub use oracle::{enumerate_oracle, reference_values, OracleResult};
