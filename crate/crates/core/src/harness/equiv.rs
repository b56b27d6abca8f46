//! Randomised equivalence checking and rewrite-rule instances.

use std::collections::BTreeMap;

use serde_json::json;
use thiserror::Error;

use super::gen::{GenConfig, Generator};
use crate::ast::{subst_select_list, Cond, Context, FromItem, Name, Query, Schema, TableRef, Term};
use crate::dbfile::database_json;
use crate::eval::{eval_query_in, Database, Env, EvalError};
use crate::kbag::{Relation, Tuple, Value};
use crate::logic::LogicKind;
use crate::wf::wf_query;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EquivError {
    #[error("left query: {0}")]
    Left(EvalError),
    #[error("right query: {0}")]
    Right(EvalError),
    #[error("queries have different schemas {left} and {right}")]
    SchemaMismatch { left: Schema, right: Schema },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub seed: u64,
    pub trial: u64,
    pub db: Database,
    pub left: Relation,
    pub right: Relation,
}

impl Counterexample {
    /// The witness with enough to replay it.
    pub fn to_json(&self) -> serde_json::Value {
        let rows = |r: &Relation| {
            r.rows()
                .iter()
                .map(|t| {
                    t.iter()
                        .map(|v| match v {
                            Value::Null => serde_json::Value::Null,
                            Value::Const(crate::kbag::BaseConst::Int(i)) => json!(i),
                            Value::Const(crate::kbag::BaseConst::Str(s)) => json!(s),
                        })
                        .collect::<Vec<_>>()
                })
                .collect::<Vec<_>>()
        };
        json!({
            "seed": self.seed,
            "trial": self.trial,
            "database": database_json(&self.db),
            "left": rows(&self.left),
            "right": rows(&self.right),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Equivalence {
    Equivalent(usize),
    Counterexample(Box<Counterexample>),
}

impl Equivalence {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, Equivalence::Equivalent(_))
    }
}

/// One side of a comparison: a query and the logic it is run under.
#[derive(Debug, Clone, Copy)]
pub struct Side<'a> {
    pub query: &'a Query,
    pub logic: LogicKind,
}

fn run(side: Side<'_>, db: &Database) -> Relation {
    eval_query_in(side.logic, &Context::empty(), db, side.query, &Env::empty())
        .expect("checked before running")
        .1
}

/// Runs `cfg.trials` random databases over `schemas` and reports the first
/// one on which the two sides differ. With `shrink`, the witness is reduced
/// first.
pub fn check_equiv(
    left: Side<'_>,
    right: Side<'_>,
    cfg: &GenConfig,
    schemas: &BTreeMap<Name, Schema>,
    shrink: bool,
) -> Result<Equivalence, EquivError> {
    let ctx = Context::empty();
    let ls = wf_query(&ctx, schemas, left.query).map_err(|e| EquivError::Left(e.into()))?;
    let rs = wf_query(&ctx, schemas, right.query).map_err(|e| EquivError::Right(e.into()))?;
    if ls != rs {
        return Err(EquivError::SchemaMismatch { left: ls, right: rs });
    }
    for trial in 0..cfg.trials as u64 {
        let db = Generator::for_trial(cfg, schemas, trial).database();
        let (l, r) = (run(left, &db), run(right, &db));
        if l != r {
            let db = if shrink { shrink_witness(left, right, db) } else { db };
            let (l, r) = (run(left, &db), run(right, &db));
            return Ok(Equivalence::Counterexample(Box::new(Counterexample {
                seed: cfg.seed,
                trial,
                db,
                left: l,
                right: r,
            })));
        }
    }
    Ok(Equivalence::Equivalent(cfg.trials))
}

fn edit_table(db: &Database, table: &Name, rows: Vec<Tuple>) -> Database {
    let mut out = db.clone();
    let (s, r) = db.get(table).expect("table exists");
    let rel = Relation::from_rows(r.arity(), rows).expect("same arity");
    out.insert(table.clone(), s.clone(), rel).expect("same arity");
    out
}

/// Greedy reduction: drop rows, then turn values into `NULL`, then `0`,
/// as long as the two sides still differ.
pub fn shrink_witness(left: Side<'_>, right: Side<'_>, mut db: Database) -> Database {
    let differs = |db: &Database| run(left, db) != run(right, db);
    debug_assert!(differs(&db));
    let names: Vec<Name> = db.tables().map(|(n, _, _)| n.clone()).collect();
    let mut progress = true;
    while progress {
        progress = false;
        for t in &names {
            let mut i = 0;
            while i < db.get(t).unwrap().1.rows().len() {
                let mut rows = db.get(t).unwrap().1.rows().to_vec();
                rows.remove(i);
                let cand = edit_table(&db, t, rows);
                if differs(&cand) {
                    db = cand;
                    progress = true;
                } else {
                    i += 1;
                }
            }
        }
    }
    for simpler in [Value::Null, Value::int(0)] {
        for t in &names {
            let n = db.get(t).unwrap().1.rows().len();
            let arity = db.get(t).unwrap().1.arity();
            for i in 0..n {
                for j in 0..arity {
                    let mut rows = db.get(t).unwrap().1.rows().to_vec();
                    if rows[i][j] == simpler {
                        continue;
                    }
                    let mut vals = rows[i].to_vec();
                    vals[j] = simpler.clone();
                    rows[i] = Tuple::new(vals);
                    // rows are re-sorted, so positions may move; that only
                    // changes which cell is tried next
                    let cand = edit_table(&db, t, rows);
                    if differs(&cand) {
                        db = cand;
                    }
                }
            }
        }
    }
    db
}

/// A pair of queries claimed equal under an outer context and environment.
#[derive(Debug, Clone)]
pub struct RewriteInstance {
    pub gamma: Context,
    pub env: Env,
    pub db: Database,
    pub lhs: Query,
    pub rhs: Query,
}

impl RewriteInstance {
    pub fn results(&self, logic: LogicKind) -> Result<(Relation, Relation), EvalError> {
        let l = eval_query_in(logic, &self.gamma, &self.db, &self.lhs, &self.env)?.1;
        let r = eval_query_in(logic, &self.gamma, &self.db, &self.rhs, &self.env)?.1;
        Ok((l, r))
    }

    pub fn holds(&self, logic: LogicKind) -> Result<bool, EvalError> {
        self.results(logic).map(|(l, r)| l == r)
    }
}

impl Generator<'_> {
    fn table_item(&mut self, gamma: &Context, depth: usize) -> FromItem {
        if depth > 0 && self.rng_bool(0.4) {
            let q = self.query_in(gamma, depth - 1);
            let k = wf_query(gamma, self.catalog(), &q).expect("generated").len();
            (TableRef::Query(Box::new(q)), self.alias(k))
        } else {
            let (t, k) = self.base_table();
            (TableRef::Base(t), self.alias(k))
        }
    }

    /// `SELECT * FROM T1 AS σ1, T2 AS σ2 WHERE TRUE` against
    /// `SELECT 1.σ1, 0.σ2 FROM T2 AS σ2, T1 AS σ1 WHERE TRUE`.
    pub fn shuffle_instance(&mut self, depth: usize) -> RewriteInstance {
        let gamma = self.context(2);
        let env = self.env(&gamma);
        let db = self.database();
        let (t1, s1) = self.table_item(&gamma, depth);
        let (t2, s2) = self.table_item(&gamma, depth);
        let lhs = Query::SelectStar {
            distinct: false,
            from: vec![(t1.clone(), s1.clone()), (t2.clone(), s2.clone())],
            cond: Cond::True,
        };
        let selections = s1
            .attrs()
            .iter()
            .map(|a| (Term::Var(1, a.clone()), a.clone()))
            .chain(s2.attrs().iter().map(|a| (Term::Var(0, a.clone()), a.clone())))
            .collect();
        let rhs = Query::Select {
            distinct: false,
            selections,
            from: vec![(t2, s2), (t1, s1)],
            cond: Cond::True,
        };
        RewriteInstance {
            gamma,
            env,
            db,
            lhs,
            rhs,
        }
    }

    /// `SELECT t̄ FROM query (SELECT ū FROM T AS σ2 WHERE c) AS σ1 WHERE TRUE`
    /// against `SELECT t̄[0.σ1 := ū] FROM T AS σ2 WHERE c`.
    pub fn unnest_instance(&mut self, depth: usize) -> RewriteInstance {
        let gamma = self.context(2);
        let env = self.env(&gamma);
        let db = self.database();
        let (t, s2) = self.table_item(&gamma, depth);
        let inner = gamma.extend(std::slice::from_ref(&s2));
        let k = self.width();
        let s1 = self.alias(k);
        let inner_names = self.alias(k);
        let u: Vec<(Term, Name)> = inner_names
            .attrs()
            .iter()
            .map(|y| (self.term(&inner), y.clone()))
            .collect();
        let c = self.cond(&inner, depth);
        let outer = gamma.extend(std::slice::from_ref(&s1));
        let m = self.width();
        let out_names = self.alias(m);
        let sel: Vec<(Term, Name)> = out_names
            .attrs()
            .iter()
            .map(|x| (self.term(&outer), x.clone()))
            .collect();
        let bindings: Vec<(Term, Name)> = u
            .iter()
            .zip(s1.attrs())
            .map(|((t, _), a)| (t.clone(), a.clone()))
            .collect();
        let sel_rhs = subst_select_list(&sel, &bindings).expect("aliases are distinct");
        let sub = Query::Select {
            distinct: false,
            selections: u,
            from: vec![(t.clone(), s2.clone())],
            cond: c.clone(),
        };
        let lhs = Query::Select {
            distinct: false,
            selections: sel,
            from: vec![(TableRef::Query(Box::new(sub)), s1)],
            cond: Cond::True,
        };
        let rhs = Query::Select {
            distinct: false,
            selections: sel_rhs,
            from: vec![(t, s2)],
            cond: c,
        };
        RewriteInstance {
            gamma,
            env,
            db,
            lhs,
            rhs,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::gen::default_schemas;
    use crate::parser::parse_query;

    fn schemas() -> BTreeMap<Name, Schema> {
        [(crate::ast::name("R"), Schema::of(&["A"]))].into_iter().collect()
    }

    #[test]
    fn reflexive() {
        let q = parse_query("SELECT * FROM table R AS (A) WHERE 0.A = 1").unwrap();
        let s = Side {
            query: &q,
            logic: LogicKind::ThreeValued,
        };
        let cfg = GenConfig {
            trials: 50,
            ..GenConfig::default()
        };
        assert_eq!(
            check_equiv(s, s, &cfg, &schemas(), true).unwrap(),
            Equivalence::Equivalent(50)
        );
    }

    #[test]
    fn tautology_differs_on_null() {
        let q1 = parse_query("SELECT 0.A AS A FROM table R AS (A) WHERE 1 = 1").unwrap();
        let q2 = parse_query("SELECT 0.A AS A FROM table R AS (A) WHERE 0.A = 0.A").unwrap();
        let l = Side {
            query: &q1,
            logic: LogicKind::ThreeValued,
        };
        let r = Side {
            query: &q2,
            logic: LogicKind::ThreeValued,
        };
        let cfg = GenConfig {
            trials: 200,
            seed: 11,
            ..GenConfig::default()
        };
        let Equivalence::Counterexample(cx) = check_equiv(l, r, &cfg, &schemas(), true).unwrap() else {
            panic!("expected a witness");
        };
        let (_, rel) = cx.db.get(&crate::ast::name("R")).unwrap();
        assert_eq!(
            rel.rows(),
            &[Tuple::new(vec![Value::Null])],
            "shrunk to a single NULL row"
        );
        assert_eq!(cx.left.card(), 1);
        assert!(cx.right.is_empty());
        // replaying the recorded trial gives the same unshrunk database
        let again = check_equiv(l, r, &cfg, &schemas(), false).unwrap();
        let Equivalence::Counterexample(raw) = again else {
            panic!()
        };
        assert_eq!(raw.trial, cx.trial);
        assert_eq!(raw.db, Generator::for_trial(&cfg, &schemas(), raw.trial).database());
        assert!(cx.to_json()["database"]["R"]["rows"][0][0].is_null());
    }

    #[test]
    fn schema_mismatch() {
        let q1 = parse_query("SELECT 0.A AS A FROM table R AS (A) WHERE TRUE").unwrap();
        let q2 = parse_query("SELECT 0.A AS B FROM table R AS (A) WHERE TRUE").unwrap();
        let l = Side {
            query: &q1,
            logic: LogicKind::TwoValued,
        };
        let r = Side {
            query: &q2,
            logic: LogicKind::TwoValued,
        };
        assert!(matches!(
            check_equiv(l, r, &GenConfig::default(), &schemas(), false),
            Err(EquivError::SchemaMismatch { .. })
        ));
    }

    #[test]
    fn rewrite_instances_hold() {
        let cfg = GenConfig::default();
        let s = default_schemas();
        for t in 0..100 {
            let mut g = Generator::for_trial(&cfg, &s, t);
            let i = g.shuffle_instance(2);
            assert!(i.holds(LogicKind::ThreeValued).unwrap(), "{i:?}");
            let i = g.unnest_instance(2);
            assert!(i.holds(LogicKind::ThreeValued).unwrap(), "{i:?}");
        }
    }
}
