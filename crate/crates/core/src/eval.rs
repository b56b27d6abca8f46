//! Evaluation.
//!
//! A judgment is first elaborated into a plan, a closure over environments,
//! after it has been checked. Running a plan cannot fail. Environments list
//! one row per scope of the governing context, index 0 first; a FROM clause
//! puts its rows in front (index 0 = first FROM item).

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::ast::{star_terms, Cond, Context, FromItem, Name, Query, Schema, SetOp, TableRef, Term};
use crate::kbag::{Relation, Tuple, Value};
use crate::logic::{sem_bpred, veq, LogicKind, Tribool, TruthValue};
use crate::wf::{wf_cond, wf_inquery, wf_query, wf_tables, wf_terms, Catalog, WfError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error(transparent)]
    Wf(#[from] WfError),
    #[error("environment has {found} row(s), context has {expected} scope(s)")]
    EnvLength { expected: usize, found: usize },
    #[error("environment row {index} has {found} value(s), scope has {expected}")]
    EnvRowArity {
        index: usize,
        expected: usize,
        found: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("table `{table}`: schema has {schema} attribute(s), relation arity is {arity}")]
pub struct DbError {
    pub table: Name,
    pub schema: usize,
    pub arity: usize,
}

/// Named base tables with their schemas.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Database {
    tables: BTreeMap<Name, (Schema, Arc<Relation>)>,
}

impl Database {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, table: Name, schema: Schema, rel: Relation) -> Result<(), DbError> {
        if schema.len() != rel.arity() {
            return Err(DbError {
                table,
                schema: schema.len(),
                arity: rel.arity(),
            });
        }
        self.tables.insert(table, (schema, Arc::new(rel)));
        Ok(())
    }

    pub fn get(&self, table: &Name) -> Option<(&Schema, &Relation)> {
        self.tables.get(table).map(|(s, r)| (s, &**r))
    }

    pub fn tables(&self) -> impl Iterator<Item = (&Name, &Schema, &Relation)> {
        self.tables.iter().map(|(n, (s, r))| (n, s, &**r))
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    /// Just the schemas.
    pub fn catalog(&self) -> BTreeMap<Name, Schema> {
        self.tables.iter().map(|(n, (s, _))| (n.clone(), s.clone())).collect()
    }

    fn relation(&self, table: &Name) -> Arc<Relation> {
        self.tables[table].1.clone()
    }
}

impl Catalog for Database {
    fn table_schema(&self, name: &Name) -> Option<&Schema> {
        self.tables.get(name).map(|(s, _)| s)
    }
}

impl fmt::Display for Database {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, (s, r)) in &self.tables {
            writeln!(f, "{n}{s} = {r}")?;
        }
        Ok(())
    }
}

/// Values for the scopes of a context, index 0 first.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Env(pub Vec<Vec<Value>>);

impl Env {
    pub fn empty() -> Self {
        Env(Vec::new())
    }

    /// Checks `rows` against the shape of `gamma`.
    pub fn for_context(gamma: &Context, rows: Vec<Vec<Value>>) -> Result<Self, EvalError> {
        if rows.len() != gamma.len() {
            return Err(EvalError::EnvLength {
                expected: gamma.len(),
                found: rows.len(),
            });
        }
        for (index, (row, sigma)) in rows.iter().zip(gamma.schemas()).enumerate() {
            if row.len() != sigma.len() {
                return Err(EvalError::EnvRowArity {
                    index,
                    expected: sigma.len(),
                    found: row.len(),
                });
            }
        }
        Ok(Env(rows))
    }

    /// `row`, cut by `widths`, in front of `self`.
    fn extend(&self, row: &Tuple, widths: &[usize]) -> Env {
        let mut rows = Vec::with_capacity(widths.len() + self.0.len());
        let mut at = 0;
        for &w in widths {
            rows.push(row[at..at + w].to_vec());
            at += w;
        }
        rows.extend(self.0.iter().cloned());
        Env(rows)
    }
}

/// An elaborated judgment: a pure function of the environment.
pub struct Plan<T> {
    run: Arc<dyn Fn(&Env) -> T + Send + Sync>,
}

impl<T> Clone for Plan<T> {
    fn clone(&self) -> Self {
        Plan { run: self.run.clone() }
    }
}

impl<T> fmt::Debug for Plan<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Plan")
    }
}

impl<T> Plan<T> {
    fn new(f: impl Fn(&Env) -> T + Send + Sync + 'static) -> Self {
        Plan { run: Arc::new(f) }
    }

    pub fn eval(&self, env: &Env) -> T {
        (self.run)(env)
    }
}

#[derive(Debug, Clone)]
pub struct QueryPlan {
    pub schema: Schema,
    pub plan: Plan<Relation>,
}

impl QueryPlan {
    pub fn eval(&self, env: &Env) -> Relation {
        self.plan.eval(env)
    }
}

#[derive(Debug, Clone)]
pub struct TablesPlan {
    /// Alias schemas bound by the FROM list, in FROM order.
    pub scopes: Vec<Schema>,
    pub plan: Plan<Relation>,
}

impl TablesPlan {
    pub fn arity(&self) -> usize {
        self.scopes.iter().map(Schema::len).sum()
    }

    pub fn eval(&self, env: &Env) -> Relation {
        self.plan.eval(env)
    }
}

pub fn eval_term(gamma: &Context, t: &Term) -> Result<Plan<Value>, EvalError> {
    wf_terms(gamma, std::slice::from_ref(t))?;
    Ok(term_plan(gamma, t))
}

pub fn eval_terms(gamma: &Context, ts: &[Term]) -> Result<Plan<Tuple>, EvalError> {
    wf_terms(gamma, ts)?;
    Ok(terms_plan(gamma, ts))
}

/// `L` is the logic of conditions inside FROM subqueries.
pub fn eval_tables<L: TruthValue>(gamma: &Context, db: &Database, from: &[FromItem]) -> Result<TablesPlan, EvalError> {
    wf_tables(gamma, db, from)?;
    Ok(Elab { db }.tables::<L>(gamma, from))
}

pub fn eval_cond<L: TruthValue>(gamma: &Context, db: &Database, c: &Cond) -> Result<Plan<L>, EvalError> {
    wf_cond(gamma, db, c)?;
    Ok(Elab { db }.cond(gamma, c))
}

pub fn eval_query<L: TruthValue>(gamma: &Context, db: &Database, q: &Query) -> Result<QueryPlan, EvalError> {
    wf_query(gamma, db, q)?;
    Ok(Elab { db }.query::<L>(gamma, q))
}

pub fn eval_inquery<L: TruthValue>(gamma: &Context, db: &Database, q: &Query) -> Result<Plan<bool>, EvalError> {
    wf_inquery(gamma, db, q)?;
    Ok(Elab { db }.inquery::<L>(gamma, q))
}

/// Evaluates `q` under `env` with the logic chosen at runtime.
pub fn eval_query_in(
    kind: LogicKind,
    gamma: &Context,
    db: &Database,
    q: &Query,
    env: &Env,
) -> Result<(Schema, Relation), EvalError> {
    let env = Env::for_context(gamma, env.0.clone())?;
    let plan = match kind {
        LogicKind::TwoValued => eval_query::<bool>(gamma, db, q)?,
        LogicKind::ThreeValued => eval_query::<Tribool>(gamma, db, q)?,
    };
    Ok((plan.schema.clone(), plan.eval(&env)))
}

/// Evaluates a closed query.
pub fn run_query(kind: LogicKind, db: &Database, q: &Query) -> Result<(Schema, Relation), EvalError> {
    eval_query_in(kind, &Context::empty(), db, q, &Env::empty())
}

fn position(gamma: &Context, n: usize, x: &Name) -> usize {
    gamma
        .get(n)
        .and_then(|s| s.position_unique(x))
        .expect("variable checked before elaboration")
}

fn term_plan(gamma: &Context, t: &Term) -> Plan<Value> {
    match t {
        Term::Const(k) => {
            let v = Value::Const(k.clone());
            Plan::new(move |_| v.clone())
        }
        Term::Null => Plan::new(|_| Value::Null),
        Term::Var(n, x) => {
            let (n, i) = (*n, position(gamma, *n, x));
            Plan::new(move |env| env.0[n][i].clone())
        }
    }
}

/// Resolved positions of a term list.
enum Slot {
    Value(Value),
    At(usize, usize),
}

fn slots(gamma: &Context, ts: &[Term]) -> Vec<Slot> {
    ts.iter()
        .map(|t| match t {
            Term::Const(k) => Slot::Value(Value::Const(k.clone())),
            Term::Null => Slot::Value(Value::Null),
            Term::Var(n, x) => Slot::At(*n, position(gamma, *n, x)),
        })
        .collect()
}

fn fill(slots: &[Slot], env: &Env) -> Tuple {
    slots
        .iter()
        .map(|s| match s {
            Slot::Value(v) => v.clone(),
            Slot::At(n, i) => env.0[*n][*i].clone(),
        })
        .collect()
}

fn terms_plan(gamma: &Context, ts: &[Term]) -> Plan<Tuple> {
    let slots = slots(gamma, ts);
    Plan::new(move |env| fill(&slots, env))
}

const CHECKED: &str = "arities checked before elaboration";

struct Elab<'a> {
    db: &'a Database,
}

impl Elab<'_> {
    fn tables<L: TruthValue>(&self, gamma: &Context, from: &[FromItem]) -> TablesPlan {
        let parts: Vec<Plan<Relation>> = from
            .iter()
            .map(|(tb, _)| match tb {
                TableRef::Base(x) => {
                    let r = self.db.relation(x);
                    Plan::new(move |_| (*r).clone())
                }
                TableRef::Query(q) => self.query::<L>(gamma, q).plan,
            })
            .collect();
        TablesPlan {
            scopes: from.iter().map(|(_, s)| s.clone()).collect(),
            plan: Plan::new(move |env| parts.iter().fold(Relation::one(), |acc, p| acc.times(&p.eval(env)))),
        }
    }

    /// The rows of the FROM product that satisfy `cond`.
    fn filtered<L: TruthValue>(
        &self,
        gamma: &Context,
        from: &[FromItem],
        cond: &Cond,
    ) -> (Context, Vec<usize>, Plan<Relation>) {
        let tables = self.tables::<L>(gamma, from);
        let inner = gamma.extend(&tables.scopes);
        let widths: Vec<usize> = tables.scopes.iter().map(Schema::len).collect();
        let c = self.cond::<L>(&inner, cond);
        let w = widths.clone();
        let plan = Plan::new(move |env: &Env| tables.eval(env).sel(|row| c.eval(&env.extend(row, &w)).is_true()));
        (inner, widths, plan)
    }

    fn select<L: TruthValue>(
        &self,
        gamma: &Context,
        distinct: bool,
        terms: &[Term],
        from: &[FromItem],
        cond: &Cond,
    ) -> Plan<Relation> {
        let (inner, widths, filtered) = self.filtered::<L>(gamma, from, cond);
        let slots = slots(&inner, terms);
        let k = terms.len();
        Plan::new(move |env| {
            let out = filtered
                .eval(env)
                .sum(k, |row| fill(&slots, &env.extend(row, &widths)))
                .expect(CHECKED);
            if distinct {
                out.flat()
            } else {
                out
            }
        })
    }

    fn query<L: TruthValue>(&self, gamma: &Context, q: &Query) -> QueryPlan {
        match q {
            Query::Select {
                distinct,
                selections,
                from,
                cond,
            } => {
                let terms: Vec<Term> = selections.iter().map(|(t, _)| t.clone()).collect();
                QueryPlan {
                    schema: Schema(selections.iter().map(|(_, x)| x.clone()).collect()),
                    plan: self.select::<L>(gamma, *distinct, &terms, from, cond),
                }
            }
            Query::SelectStar { distinct, from, cond } => {
                let scopes: Vec<Schema> = from.iter().map(|(_, s)| s.clone()).collect();
                QueryPlan {
                    schema: crate::ast::flatten_scopes(&scopes),
                    plan: self.select::<L>(gamma, *distinct, &star_terms(&scopes), from, cond),
                }
            }
            Query::SetOp { op, all, left, right } => {
                let l = self.query::<L>(gamma, left);
                let r = self.query::<L>(gamma, right);
                let (op, all) = (*op, *all);
                QueryPlan {
                    schema: l.schema.clone(),
                    plan: Plan::new(move |env| {
                        let (s1, s2) = (l.eval(env), r.eval(env));
                        let out = match op {
                            SetOp::Union => s1.plus(&s2),
                            SetOp::Intersect => s1.inter(&s2),
                            SetOp::Except if all => s1.minus(&s2),
                            SetOp::Except => s1.flat().minus(&s2),
                        }
                        .expect(CHECKED);
                        if all || op == SetOp::Except {
                            out
                        } else {
                            out.flat()
                        }
                    }),
                }
            }
        }
    }

    fn inquery<L: TruthValue>(&self, gamma: &Context, q: &Query) -> Plan<bool> {
        match q {
            Query::SelectStar { distinct, from, cond } => {
                let (_, _, filtered) = self.filtered::<L>(gamma, from, cond);
                let distinct = *distinct;
                Plan::new(move |env| {
                    let s = filtered.eval(env);
                    let s = if distinct { s.flat() } else { s };
                    s.card() > 0
                })
            }
            _ => {
                let p = self.query::<L>(gamma, q);
                Plan::new(move |env| p.eval(env).card() > 0)
            }
        }
    }

    fn cond<L: TruthValue>(&self, gamma: &Context, c: &Cond) -> Plan<L> {
        match c {
            Cond::True => Plan::new(|_| L::TRUE),
            Cond::False => Plan::new(|_| L::FALSE),
            Cond::IsNull { is_null, term } => {
                let t = term_plan(gamma, term);
                let b = *is_null;
                Plan::new(move |env| L::of_bool(t.eval(env).is_null() == b))
            }
            Cond::Pred { op, args } => {
                let ts = terms_plan(gamma, args);
                let op = op.clone();
                Plan::new(move |env| sem_bpred::<L>(&op, &ts.eval(env)).expect(CHECKED))
            }
            Cond::Memb { is_in, terms, query } => {
                let ts = terms_plan(gamma, terms);
                let q = self.query::<L>(gamma, query);
                let is_in = *is_in;
                Plan::new(move |env| {
                    let v = ts.eval(env);
                    let s = q.eval(env);
                    let all =
                        |row: &Tuple, p: &dyn Fn(L) -> bool| v.iter().zip(row.iter()).all(|(a, b)| p(veq::<L>(a, b)));
                    let ntt = s.sel(|row| all(row, &|x| x.is_true())).card();
                    let nuu = s.sel(|row| all(row, &|x| !x.is_false())).card();
                    if ntt > 0 {
                        L::of_bool(is_in)
                    } else if nuu > 0 {
                        L::MAYBE
                    } else {
                        L::of_bool(!is_in)
                    }
                })
            }
            Cond::Exists(q) => {
                let p = self.inquery::<L>(gamma, q);
                Plan::new(move |env| L::of_bool(p.eval(env)))
            }
            Cond::And(l, r) => {
                let (l, r) = (self.cond::<L>(gamma, l), self.cond::<L>(gamma, r));
                Plan::new(move |env| l.eval(env).and(r.eval(env)))
            }
            Cond::Or(l, r) => {
                let (l, r) = (self.cond::<L>(gamma, l), self.cond::<L>(gamma, r));
                Plan::new(move |env| l.eval(env).or(r.eval(env)))
            }
            Cond::Not(c) => {
                let c = self.cond::<L>(gamma, c);
                Plan::new(move |env| c.eval(env).neg())
            }
        }
    }
}
