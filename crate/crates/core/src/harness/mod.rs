//! Randomised checking: instance generators, a brute-force oracle and
//! equivalence testing.

pub mod equiv;
pub mod gen;
pub mod oracle;

pub use equiv::{check_equiv, shrink_witness, Counterexample, EquivError, Equivalence, RewriteInstance, Side};
pub use gen::{default_schemas, gen_database, gen_query, trial_rng, GenConfig, Generator};
pub use oracle::{oracle_cond, oracle_eval, oracle_eval_in};
