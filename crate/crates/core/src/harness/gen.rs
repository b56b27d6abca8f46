//! Random instances: databases, contexts, environments, terms, conditions
//! and queries that pass the well-formedness checks.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ast::{name, Cond, Context, FromItem, Name, PredOp, Query, Schema, SetOp, TableRef, Term};
use crate::eval::{Database, Env};
use crate::kbag::{Relation, Tuple, Value};
use crate::wf::wf_query;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenConfig {
    pub seed: u64,
    pub max_rows: usize,
    pub value_domain: Vec<Value>,
    pub max_query_depth: usize,
    pub max_tables_per_from: usize,
    pub max_select_width: usize,
    pub trials: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 0,
            max_rows: 4,
            value_domain: vec![Value::Null, Value::int(0), Value::int(1), Value::int(2)],
            max_query_depth: 3,
            max_tables_per_from: 2,
            max_select_width: 3,
            trials: 100,
        }
    }
}

impl GenConfig {
    pub fn with_seed(seed: u64) -> Self {
        GenConfig {
            seed,
            ..Self::default()
        }
    }

    /// The same bounds with `NULL` removed from the value domain.
    pub fn null_free(&self) -> Self {
        GenConfig {
            value_domain: self.value_domain.iter().filter(|v| !v.is_null()).cloned().collect(),
            ..self.clone()
        }
    }

    fn has_null(&self) -> bool {
        self.value_domain.iter().any(Value::is_null)
    }
}

/// The random stream of one trial. Streams of different trials are
/// independent, so trials can be run in any order.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Three tables, one of them unary, with overlapping attribute names.
pub fn default_schemas() -> BTreeMap<Name, Schema> {
    [
        ("R", Schema::of(&["A", "B"])),
        ("S", Schema::of(&["A"])),
        ("T", Schema::of(&["B", "C", "D"])),
    ]
    .into_iter()
    .map(|(n, s)| (name(n), s))
    .collect()
}

const POOL: [&str; 6] = ["A", "B", "C", "D", "E", "F"];

fn pool_name(i: usize) -> Name {
    match POOL.get(i) {
        Some(s) => name(s),
        None => name(&format!("X{i}")),
    }
}

pub fn gen_database(cfg: &GenConfig, schemas: &BTreeMap<Name, Schema>) -> Database {
    Generator::new(cfg, schemas, trial_rng(cfg.seed, 0)).database()
}

pub fn gen_query(cfg: &GenConfig, schemas: &BTreeMap<Name, Schema>) -> Query {
    Generator::new(cfg, schemas, trial_rng(cfg.seed, 0)).query()
}

pub struct Generator<'a> {
    cfg: &'a GenConfig,
    schemas: &'a BTreeMap<Name, Schema>,
    tables: Vec<(&'a Name, &'a Schema)>,
    pub rng: ChaCha8Rng,
}

impl<'a> Generator<'a> {
    pub fn new(cfg: &'a GenConfig, schemas: &'a BTreeMap<Name, Schema>, rng: ChaCha8Rng) -> Self {
        assert!(!schemas.is_empty(), "need at least one table to generate queries");
        Generator {
            cfg,
            schemas,
            tables: schemas.iter().collect(),
            rng,
        }
    }

    pub fn for_trial(cfg: &'a GenConfig, schemas: &'a BTreeMap<Name, Schema>, trial: u64) -> Self {
        Self::new(cfg, schemas, trial_rng(cfg.seed, trial))
    }

    pub fn rng_bool(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }

    pub fn catalog(&self) -> &BTreeMap<Name, Schema> {
        self.schemas
    }

    /// A random base table and its arity.
    pub fn base_table(&mut self) -> (Name, usize) {
        let (t, s) = *self.tables.choose(&mut self.rng).unwrap();
        (t.clone(), s.len())
    }

    /// A select-list width within bounds.
    pub fn width(&mut self) -> usize {
        self.rng.gen_range(1..=self.cfg.max_select_width.max(1))
    }

    pub fn value(&mut self) -> Value {
        self.cfg
            .value_domain
            .choose(&mut self.rng)
            .cloned()
            .unwrap_or(Value::Null)
    }

    pub fn relation(&mut self, arity: usize) -> Relation {
        let n = self.rng.gen_range(0..=self.cfg.max_rows);
        let rows = (0..n)
            .map(|_| (0..arity).map(|_| self.value()).collect::<Tuple>())
            .collect();
        Relation::from_rows(arity, rows).expect("rows built with the right arity")
    }

    pub fn database(&mut self) -> Database {
        let mut db = Database::new();
        for (n, s) in self.schemas.iter() {
            let r = self.relation(s.len());
            db.insert(n.clone(), s.clone(), r).expect("arity matches schema");
        }
        db
    }

    /// `k` distinct names from a small pool, so that scopes share names.
    pub fn alias(&mut self, k: usize) -> Schema {
        let width = POOL.len().max(k);
        let mut idx: Vec<usize> = (0..width).collect();
        idx.shuffle(&mut self.rng);
        Schema(idx[..k].iter().map(|&i| pool_name(i)).collect())
    }

    pub fn context(&mut self, max_scopes: usize) -> Context {
        let n = self.rng.gen_range(0..=max_scopes);
        Context(
            (0..n)
                .map(|_| {
                    let k = self.rng.gen_range(1..=3);
                    self.alias(k)
                })
                .collect(),
        )
    }

    pub fn env(&mut self, gamma: &Context) -> Env {
        Env(gamma
            .schemas()
            .iter()
            .map(|s| (0..s.len()).map(|_| self.value()).collect())
            .collect())
    }

    pub fn term(&mut self, gamma: &Context) -> Term {
        let non_empty: Vec<usize> = (0..gamma.len()).filter(|&i| !gamma.schemas()[i].is_empty()).collect();
        let roll = self.rng.gen_range(0..10);
        if roll < 7 && !non_empty.is_empty() {
            // favour the innermost scope, but reach outwards too
            let n = if self.rng.gen_bool(0.6) {
                non_empty[0]
            } else {
                *non_empty.choose(&mut self.rng).unwrap()
            };
            let attrs = gamma.schemas()[n].attrs();
            Term::Var(n, attrs.choose(&mut self.rng).unwrap().clone())
        } else if roll < 8 && self.cfg.has_null() {
            Term::Null
        } else {
            match self.value() {
                Value::Const(k) => Term::Const(k),
                Value::Null => Term::Null,
            }
        }
    }

    fn terms(&mut self, gamma: &Context, k: usize) -> Vec<Term> {
        (0..k).map(|_| self.term(gamma)).collect()
    }

    /// A closed query.
    pub fn query(&mut self) -> Query {
        let depth = self.rng.gen_range(0..=self.cfg.max_query_depth);
        self.query_in(&Context::empty(), depth)
    }

    pub fn query_in(&mut self, gamma: &Context, depth: usize) -> Query {
        let roll = if depth == 0 {
            self.rng.gen_range(0..2)
        } else {
            self.rng.gen_range(0..7)
        };
        match roll {
            0 | 3 => self.select(gamma, depth, None),
            1 | 4 => self.select_star(gamma, depth),
            _ => {
                let left = self.query_in(gamma, depth - 1);
                let schema = self.schema_of(gamma, &left);
                let right = self.query_with_schema(gamma, depth - 1, &schema);
                let op = *[SetOp::Union, SetOp::Intersect, SetOp::Except]
                    .choose(&mut self.rng)
                    .unwrap();
                Query::set_op(op, self.rng.gen_bool(0.5), left, right)
            }
        }
    }

    /// A query whose output schema is exactly `names`.
    pub fn query_with_schema(&mut self, gamma: &Context, depth: usize, names: &Schema) -> Query {
        if depth > 0 && self.rng.gen_bool(0.25) {
            let l = self.query_with_schema(gamma, depth - 1, names);
            let r = self.query_with_schema(gamma, depth - 1, names);
            let op = *[SetOp::Union, SetOp::Intersect, SetOp::Except]
                .choose(&mut self.rng)
                .unwrap();
            return Query::set_op(op, self.rng.gen_bool(0.5), l, r);
        }
        if !names.has_duplicates() && self.rng.gen_bool(0.3) {
            let base: Vec<&Name> = self
                .tables
                .iter()
                .filter(|(_, s)| s.len() == names.len())
                .map(|(n, _)| *n)
                .collect();
            if let Some(&t) = base.choose(&mut self.rng) {
                let from = vec![(TableRef::Base(t.clone()), names.clone())];
                let inner = gamma.extend(std::slice::from_ref(names));
                let cond = self.cond(&inner, depth.saturating_sub(1));
                return Query::SelectStar {
                    distinct: self.rng.gen_bool(0.3),
                    from,
                    cond,
                };
            }
        }
        self.select(gamma, depth, Some(names))
    }

    fn schema_of(&self, gamma: &Context, q: &Query) -> Schema {
        wf_query(gamma, self.schemas, q).expect("generated queries are well formed")
    }

    fn tables_clause(&mut self, gamma: &Context, depth: usize) -> Vec<FromItem> {
        let n = if depth == 0 {
            1
        } else {
            self.rng.gen_range(1..=self.cfg.max_tables_per_from.max(1))
        };
        (0..n)
            .map(|_| {
                if depth > 0 && self.rng.gen_bool(0.3) {
                    let q = self.query_in(gamma, depth - 1);
                    let k = self.schema_of(gamma, &q).len();
                    (TableRef::Query(Box::new(q)), self.alias(k))
                } else {
                    let (t, s) = *self.tables.choose(&mut self.rng).unwrap();
                    let k = s.len();
                    (TableRef::Base(t.clone()), self.alias(k))
                }
            })
            .collect()
    }

    fn select(&mut self, gamma: &Context, depth: usize, names: Option<&Schema>) -> Query {
        let from = self.tables_clause(gamma, depth);
        let scopes: Vec<Schema> = from.iter().map(|(_, s)| s.clone()).collect();
        let inner = gamma.extend(&scopes);
        let names = match names {
            Some(s) => s.clone(),
            None => {
                let k = self.rng.gen_range(1..=self.cfg.max_select_width.max(1));
                if self.rng.gen_bool(0.1) {
                    // repeated output names are legal
                    Schema(vec![pool_name(0); k])
                } else {
                    self.alias(k)
                }
            }
        };
        let terms = self.terms(&inner, names.len());
        let cond = self.where_clause(&inner, depth);
        Query::Select {
            distinct: self.rng.gen_bool(0.3),
            selections: terms.into_iter().zip(names.0).collect(),
            from,
            cond,
        }
    }

    fn select_star(&mut self, gamma: &Context, depth: usize) -> Query {
        let from = self.tables_clause(gamma, depth);
        let scopes: Vec<Schema> = from.iter().map(|(_, s)| s.clone()).collect();
        let cond = self.where_clause(&gamma.extend(&scopes), depth);
        Query::SelectStar {
            distinct: self.rng.gen_bool(0.3),
            from,
            cond,
        }
    }

    /// Unfiltered often enough that results are not mostly empty.
    fn where_clause(&mut self, gamma: &Context, depth: usize) -> Cond {
        if self.rng.gen_bool(0.3) {
            Cond::True
        } else {
            self.cond(gamma, depth)
        }
    }

    fn atom(&mut self, gamma: &Context) -> Cond {
        match self.rng.gen_range(0..10) {
            0 | 1 => Cond::True,
            2 => Cond::False,
            3..=5 => Cond::IsNull {
                is_null: self.rng.gen_bool(0.5),
                term: self.term(gamma),
            },
            _ => {
                let op = PredOp::COMPARISONS.choose(&mut self.rng).unwrap().clone();
                let (l, r) = (self.term(gamma), self.term(gamma));
                Cond::pred(op, l, r)
            }
        }
    }

    pub fn cond(&mut self, gamma: &Context, depth: usize) -> Cond {
        if depth == 0 {
            return self.atom(gamma);
        }
        match self.rng.gen_range(0..9) {
            0 | 1 => self.atom(gamma),
            2 => {
                let k = self.rng.gen_range(1..=2);
                let terms = self.terms(gamma, k);
                let names = self.alias(k);
                let q = self.query_with_schema(gamma, depth - 1, &names);
                Cond::memb(self.rng.gen_bool(0.5), terms, q)
            }
            3 => Cond::exists(self.query_in(gamma, depth - 1)),
            4 | 5 => Cond::and(self.cond(gamma, depth - 1), self.cond(gamma, depth - 1)),
            6 | 7 => Cond::or(self.cond(gamma, depth - 1), self.cond(gamma, depth - 1)),
            _ => Cond::not(self.cond(gamma, depth - 1)),
        }
    }
}
