//! A brute-force evaluator used as a test oracle.
//!
//! Bags are plain unsorted row lists, names are looked up while running and
//! multiplicities are counted by scanning. Only the truth-value operations
//! are shared with the real evaluator.

use crate::ast::{Cond, Name, Query, Schema, SetOp, TableRef, Term};
use crate::eval::{Database, Env};
use crate::kbag::Value;
use crate::logic::{sem_bpred, veq, LogicKind, Tribool, TruthValue};

pub type Row = Vec<Value>;

/// One scope of the environment: attribute names and their values.
#[derive(Clone)]
struct Scope {
    names: Vec<Name>,
    values: Row,
}

struct Oracle<'a> {
    db: &'a Database,
}

/// Result rows of `q` in no particular order, or `None` if `q` refers to
/// something that does not exist.
pub fn oracle_eval(kind: LogicKind, db: &Database, q: &Query) -> Option<Vec<Row>> {
    oracle_eval_in(kind, db, &[], &Env::empty(), q)
}

/// As [`oracle_eval`], under an outer context given by its scopes' names.
pub fn oracle_eval_in(kind: LogicKind, db: &Database, scopes: &[Vec<Name>], env: &Env, q: &Query) -> Option<Vec<Row>> {
    let env = bind(scopes, env);
    let o = Oracle { db };
    match kind {
        LogicKind::TwoValued => o.query::<bool>(&env, q).map(|(_, rows)| rows),
        LogicKind::ThreeValued => o.query::<Tribool>(&env, q).map(|(_, rows)| rows),
    }
}

pub fn oracle_cond(kind: LogicKind, db: &Database, scopes: &[Vec<Name>], env: &Env, c: &Cond) -> Option<Tribool> {
    let env = bind(scopes, env);
    let o = Oracle { db };
    match kind {
        LogicKind::TwoValued => o
            .cond::<bool>(&env, c)
            .map(|b| if b { Tribool::True } else { Tribool::False }),
        LogicKind::ThreeValued => o.cond::<Tribool>(&env, c),
    }
}

fn bind(scopes: &[Vec<Name>], env: &Env) -> Vec<Scope> {
    scopes
        .iter()
        .zip(&env.0)
        .map(|(n, v)| Scope {
            names: n.clone(),
            values: v.clone(),
        })
        .collect()
}

fn count(rows: &[Row], r: &Row) -> usize {
    rows.iter().filter(|x| *x == r).count()
}

fn distinct(rows: Vec<Row>) -> Vec<Row> {
    let mut out: Vec<Row> = Vec::new();
    for r in rows {
        if !out.contains(&r) {
            out.push(r);
        }
    }
    out
}

impl Oracle<'_> {
    fn term(&self, env: &[Scope], t: &Term) -> Option<Value> {
        match t {
            Term::Const(k) => Some(Value::Const(k.clone())),
            Term::Null => Some(Value::Null),
            Term::Var(n, x) => {
                let scope = env.get(*n)?;
                let i = scope.names.iter().position(|a| a == x)?;
                scope.values.get(i).cloned()
            }
        }
    }

    fn terms(&self, env: &[Scope], ts: &[Term]) -> Option<Row> {
        ts.iter().map(|t| self.term(env, t)).collect()
    }

    /// Every combination of rows of the FROM items, as per-item scopes.
    fn combos<L: TruthValue>(&self, env: &[Scope], from: &[(TableRef, Schema)]) -> Option<Vec<Vec<Scope>>> {
        let mut combos: Vec<Vec<Scope>> = vec![Vec::new()];
        for (tb, alias) in from {
            let rows = match tb {
                TableRef::Base(x) => self.db.get(x)?.1.rows().iter().map(|t| t.to_vec()).collect(),
                TableRef::Query(q) => self.query::<L>(env, q)?.1,
            };
            let mut next = Vec::new();
            for c in &combos {
                for r in &rows {
                    let mut c = c.clone();
                    c.push(Scope {
                        names: alias.attrs().to_vec(),
                        values: r.clone(),
                    });
                    next.push(c);
                }
            }
            combos = next;
        }
        Some(combos)
    }

    /// Output width and rows.
    fn query<L: TruthValue>(&self, env: &[Scope], q: &Query) -> Option<(usize, Vec<Row>)> {
        match q {
            Query::Select {
                distinct: d,
                selections,
                from,
                cond,
            } => {
                let mut out = Vec::new();
                for scopes in self.combos::<L>(env, from)? {
                    let inner: Vec<Scope> = scopes.into_iter().chain(env.iter().cloned()).collect();
                    if self.cond::<L>(&inner, cond)?.is_true() {
                        let ts: Vec<Term> = selections.iter().map(|(t, _)| t.clone()).collect();
                        out.push(self.terms(&inner, &ts)?);
                    }
                }
                Some((selections.len(), if *d { distinct(out) } else { out }))
            }
            Query::SelectStar {
                distinct: d,
                from,
                cond,
            } => {
                let width = from.iter().map(|(_, s)| s.len()).sum();
                let mut out = Vec::new();
                for scopes in self.combos::<L>(env, from)? {
                    let inner: Vec<Scope> = scopes.iter().cloned().chain(env.iter().cloned()).collect();
                    if self.cond::<L>(&inner, cond)?.is_true() {
                        out.push(scopes.into_iter().flat_map(|s| s.values).collect());
                    }
                }
                Some((width, if *d { distinct(out) } else { out }))
            }
            Query::SetOp { op, all, left, right } => {
                let (w, l) = self.query::<L>(env, left)?;
                let (_, r) = self.query::<L>(env, right)?;
                let keys = distinct(l.clone());
                let mut out = Vec::new();
                match op {
                    SetOp::Union => {
                        out = l.into_iter().chain(r).collect();
                        if !all {
                            out = distinct(out);
                        }
                    }
                    SetOp::Intersect => {
                        for k in keys {
                            let n = count(&l, &k).min(count(&r, &k));
                            let n = if *all { n } else { n.min(1) };
                            out.extend(std::iter::repeat_n(k, n));
                        }
                    }
                    SetOp::Except => {
                        for k in keys {
                            let left_n = if *all { count(&l, &k) } else { 1 };
                            let n = left_n.saturating_sub(count(&r, &k));
                            out.extend(std::iter::repeat_n(k, n));
                        }
                    }
                }
                Some((w, out))
            }
        }
    }

    fn cond<L: TruthValue>(&self, env: &[Scope], c: &Cond) -> Option<L> {
        Some(match c {
            Cond::True => L::TRUE,
            Cond::False => L::FALSE,
            Cond::IsNull { is_null, term } => L::of_bool(self.term(env, term)?.is_null() == *is_null),
            Cond::Pred { op, args } => sem_bpred::<L>(op, &self.terms(env, args)?).ok()?,
            Cond::Memb { is_in, terms, query } => {
                let v = self.terms(env, terms)?;
                let (_, rows) = self.query::<L>(env, query)?;
                let mut equal = false;
                let mut maybe = false;
                for r in &rows {
                    if r.len() != v.len() {
                        return None;
                    }
                    let cmp: Vec<L> = v.iter().zip(r).map(|(a, b)| veq::<L>(a, b)).collect();
                    equal |= cmp.iter().all(|x| x.is_true());
                    maybe |= cmp.iter().all(|x| !x.is_false());
                }
                if equal {
                    L::of_bool(*is_in)
                } else if maybe {
                    L::MAYBE
                } else {
                    L::of_bool(!is_in)
                }
            }
            Cond::Exists(q) => L::of_bool(!self.query::<L>(env, q)?.1.is_empty()),
            Cond::And(l, r) => self.cond::<L>(env, l)?.and(self.cond::<L>(env, r)?),
            Cond::Or(l, r) => self.cond::<L>(env, l)?.or(self.cond::<L>(env, r)?),
            Cond::Not(c) => self.cond::<L>(env, c)?.neg(),
        })
    }
}

/// Sorted copy, for comparing bags.
pub fn sorted(mut rows: Vec<Row>) -> Vec<Row> {
    rows.sort();
    rows
}
