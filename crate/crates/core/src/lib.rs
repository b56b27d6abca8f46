//! A reference interpreter for a core SQL fragment with `NULL`s, bag
//! semantics and a choice of Boolean or Kleene logic.
//!
//! Queries are parsed from text ([`parser`]), checked ([`wf`]), elaborated
//! into plans and run against a [`Database`] ([`eval`]). [`translate`]
//! rewrites a query so that it has the same result under Boolean logic as
//! the original under three-valued logic. [`harness`] holds the random
//! generators and the brute-force evaluator the test suites are built on.

pub mod ast;
pub mod dbfile;
pub mod eval;
pub mod harness;
pub mod kbag;
pub mod logic;
pub mod parser;
pub mod translate;
pub mod wf;

pub use ast::{Cond, Context, FromItem, Name, PredOp, Query, Schema, SetOp, TableRef, Term};
pub use eval::{run_query, Database, Env, EvalError};
pub use kbag::{BaseConst, Relation, Tuple, Value};
pub use logic::{LogicKind, Tribool, TruthValue};
pub use parser::{parse_query, render, ParseError};
pub use translate::{ffcond, ttcond, ttquery};
pub use wf::{wf_query, WfError, WfErrorKind};
