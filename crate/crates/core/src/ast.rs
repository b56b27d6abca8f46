//! Abstract syntax: terms, conditions, queries and table references.
//!
//! Attributes are referenced as `n.x`: `n` is a 0-based de Bruijn index into
//! the stack of FROM scopes (0 = innermost) and `x` is an attribute name.
//!
//! Child numbering (used by [`NodePath`]) follows source order:
//! * `Select`: selection terms, then FROM items, then the WHERE condition;
//! * `SelectStar`: FROM items, then the WHERE condition;
//! * set operations: left, right;
//! * a FROM item has one child (the subquery) when it is `query (..)`;
//! * `IsNull`: the term; `Pred`: the arguments; `Memb`: the terms, then the
//!   subquery; `Exists`/`Not`: the operand; `And`/`Or`: left, right.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::kbag::BaseConst;

/// Prefix reserved for generated attribute names.
pub const FRESH_PREFIX: char = '?';

/// Position of a node below a query root, as child indices.
pub type NodePath = Vec<usize>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NameError {
    #[error("empty name")]
    Empty,
    #[error("name `{0}` uses the reserved prefix `?`")]
    Reserved(String),
}

/// An attribute or table name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Name(Arc<str>);

impl Name {
    pub fn new(s: &str) -> Result<Self, NameError> {
        if s.is_empty() {
            Err(NameError::Empty)
        } else if s.contains(FRESH_PREFIX) {
            Err(NameError::Reserved(s.to_string()))
        } else {
            Ok(Name(s.into()))
        }
    }

    /// The `i`-th generated name, `?a{i}`. Never collides with [`Name::new`].
    pub fn fresh(i: usize) -> Self {
        Name(format!("{FRESH_PREFIX}a{i}").into())
    }

    pub fn is_fresh(&self) -> bool {
        self.0.starts_with(FRESH_PREFIX)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Shorthand for building names in tests and generators.
///
/// # Panics
/// If `s` is not a valid user name.
pub fn name(s: &str) -> Name {
    Name::new(s).unwrap_or_else(|e| panic!("{e}"))
}

/// `n` pairwise distinct generated names.
pub fn fresh_schema(n: usize) -> Schema {
    Schema((0..n).map(Name::fresh).collect())
}

/// A list of attribute names. Duplicates are representable.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Schema(pub Vec<Name>);

impl Schema {
    pub fn new(attrs: Vec<Name>) -> Self {
        Schema(attrs)
    }

    pub fn of(attrs: &[&str]) -> Self {
        Schema(attrs.iter().map(|a| name(a)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn attrs(&self) -> &[Name] {
        &self.0
    }

    pub fn occurrences(&self, x: &Name) -> usize {
        self.0.iter().filter(|a| *a == x).count()
    }

    /// Position of `x` when it occurs exactly once.
    pub fn position_unique(&self, x: &Name) -> Option<usize> {
        let pos = self.0.iter().position(|a| a == x)?;
        (self.occurrences(x) == 1).then_some(pos)
    }

    pub fn has_duplicates(&self) -> bool {
        self.0.iter().enumerate().any(|(i, a)| self.0[i + 1..].contains(a))
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            a.fmt(f)?;
        }
        f.write_str(")")
    }
}

/// Schemas of the tables in scope; index 0 is the innermost FROM scope.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Context(pub Vec<Schema>);

impl Context {
    pub fn empty() -> Self {
        Context(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, n: usize) -> Option<&Schema> {
        self.0.get(n)
    }

    pub fn schemas(&self) -> &[Schema] {
        &self.0
    }

    /// `front ++ self`: the context seen inside a FROM clause binding `front`.
    pub fn extend(&self, front: &[Schema]) -> Context {
        let mut v = front.to_vec();
        v.extend_from_slice(&self.0);
        Context(v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Const(BaseConst),
    Null,
    Var(usize, Name),
}

impl Term {
    pub fn int(i: i64) -> Self {
        Term::Const(BaseConst::Int(i))
    }

    pub fn var(n: usize, x: &str) -> Self {
        Term::Var(n, name(x))
    }

    /// Shifts every table index by `k`.
    pub fn lift(&self, k: usize) -> Term {
        match self {
            Term::Var(n, x) => Term::Var(k + n, x.clone()),
            t => t.clone(),
        }
    }
}

/// A user-registered predicate over constants.
pub struct CustomPredicate {
    pub name: String,
    pub arity: usize,
    pub eval: fn(&[BaseConst]) -> bool,
}

impl fmt::Debug for CustomPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

/// Base predicates. Comparisons use the total order on constants, so
/// `1 < 'a'` holds.
#[derive(Debug, Clone)]
pub enum PredOp {
    Eq,
    Neq,
    Lt,
    Le,
    Gt,
    Ge,
    Custom(Arc<CustomPredicate>),
}

impl PartialEq for PredOp {
    fn eq(&self, other: &Self) -> bool {
        use PredOp::*;
        match (self, other) {
            (Custom(a), Custom(b)) => a.name == b.name && a.arity == b.arity,
            (Eq, Eq) | (Neq, Neq) | (Lt, Lt) | (Le, Le) | (Gt, Gt) | (Ge, Ge) => true,
            _ => false,
        }
    }
}

impl std::cmp::Eq for PredOp {}

impl std::hash::Hash for PredOp {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        std::mem::discriminant(self).hash(state);
        if let PredOp::Custom(p) = self {
            p.name.hash(state);
            p.arity.hash(state);
        }
    }
}

impl PredOp {
    pub const COMPARISONS: [PredOp; 6] = [PredOp::Eq, PredOp::Neq, PredOp::Lt, PredOp::Le, PredOp::Gt, PredOp::Ge];

    pub fn arity(&self) -> usize {
        match self {
            PredOp::Custom(p) => p.arity,
            _ => 2,
        }
    }

    /// Boolean semantics on constants. `args.len()` must equal the arity.
    pub fn holds(&self, args: &[BaseConst]) -> bool {
        debug_assert_eq!(args.len(), self.arity());
        match self {
            PredOp::Eq => args[0] == args[1],
            PredOp::Neq => args[0] != args[1],
            PredOp::Lt => args[0] < args[1],
            PredOp::Le => args[0] <= args[1],
            PredOp::Gt => args[0] > args[1],
            PredOp::Ge => args[0] >= args[1],
            PredOp::Custom(p) => (p.eval)(args),
        }
    }

    /// Concrete syntax of the infix comparisons.
    pub fn symbol(&self) -> Option<&'static str> {
        Some(match self {
            PredOp::Eq => "=",
            PredOp::Neq => "<>",
            PredOp::Lt => "<",
            PredOp::Le => "<=",
            PredOp::Gt => ">",
            PredOp::Ge => ">=",
            PredOp::Custom(_) => return None,
        })
    }
}

/// Named predicates available to the parser beyond the six comparisons.
#[derive(Debug, Clone, Default)]
pub struct PredicateRegistry {
    preds: Vec<Arc<CustomPredicate>>,
}

impl PredicateRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, pred: CustomPredicate) {
        self.preds.retain(|p| p.name != pred.name);
        self.preds.push(Arc::new(pred));
    }

    pub fn lookup(&self, name: &str) -> Option<PredOp> {
        self.preds
            .iter()
            .find(|p| p.name == name)
            .map(|p| PredOp::Custom(p.clone()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SetOp {
    Union,
    Intersect,
    Except,
}

impl SetOp {
    pub fn keyword(self) -> &'static str {
        match self {
            SetOp::Union => "UNION",
            SetOp::Intersect => "INTERSECT",
            SetOp::Except => "EXCEPT",
        }
    }
}

pub type FromItem = (TableRef, Schema);

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TableRef {
    Base(Name),
    Query(Box<Query>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Query {
    Select {
        distinct: bool,
        selections: Vec<(Term, Name)>,
        from: Vec<FromItem>,
        cond: Cond,
    },
    SelectStar {
        distinct: bool,
        from: Vec<FromItem>,
        cond: Cond,
    },
    SetOp {
        op: SetOp,
        all: bool,
        left: Box<Query>,
        right: Box<Query>,
    },
}

impl Query {
    pub fn set_op(op: SetOp, all: bool, left: Query, right: Query) -> Query {
        Query::SetOp {
            op,
            all,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn union(all: bool, left: Query, right: Query) -> Query {
        Query::set_op(SetOp::Union, all, left, right)
    }

    pub fn intersect(all: bool, left: Query, right: Query) -> Query {
        Query::set_op(SetOp::Intersect, all, left, right)
    }

    pub fn except(all: bool, left: Query, right: Query) -> Query {
        Query::set_op(SetOp::Except, all, left, right)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Cond {
    True,
    False,
    /// `t IS NULL` when `is_null`, `t IS NOT NULL` otherwise.
    IsNull {
        is_null: bool,
        term: Term,
    },
    Pred {
        op: PredOp,
        args: Vec<Term>,
    },
    /// `t̄ IN Q` when `is_in`, `t̄ NOT IN Q` otherwise.
    Memb {
        is_in: bool,
        terms: Vec<Term>,
        query: Box<Query>,
    },
    Exists(Box<Query>),
    And(Box<Cond>, Box<Cond>),
    Or(Box<Cond>, Box<Cond>),
    Not(Box<Cond>),
}

impl Cond {
    pub fn and(l: Cond, r: Cond) -> Cond {
        Cond::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Cond, r: Cond) -> Cond {
        Cond::Or(Box::new(l), Box::new(r))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(c: Cond) -> Cond {
        Cond::Not(Box::new(c))
    }

    pub fn pred(op: PredOp, l: Term, r: Term) -> Cond {
        Cond::Pred { op, args: vec![l, r] }
    }

    pub fn eq(l: Term, r: Term) -> Cond {
        Cond::pred(PredOp::Eq, l, r)
    }

    pub fn is_null(term: Term) -> Cond {
        Cond::IsNull { is_null: true, term }
    }

    pub fn is_not_null(term: Term) -> Cond {
        Cond::IsNull { is_null: false, term }
    }

    pub fn exists(q: Query) -> Cond {
        Cond::Exists(Box::new(q))
    }

    pub fn memb(is_in: bool, terms: Vec<Term>, q: Query) -> Cond {
        Cond::Memb {
            is_in,
            terms,
            query: Box::new(q),
        }
    }
}

/// The term list a `SELECT *` stands for: every attribute of every FROM
/// scope, in FROM order then schema order.
pub fn star_terms(scopes: &[Schema]) -> Vec<Term> {
    scopes
        .iter()
        .enumerate()
        .flat_map(|(i, s)| s.attrs().iter().map(move |a| Term::Var(i, a.clone())))
        .collect()
}

/// Concatenation of the FROM scopes: the output schema of `SELECT *`.
pub fn flatten_scopes(scopes: &[Schema]) -> Schema {
    Schema(scopes.iter().flat_map(|s| s.attrs().iter().cloned()).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SubstError {
    #[error("`0.{0}` is not bound by the inner select list")]
    Unbound(Name),
    #[error("`0.{0}` is bound more than once by the inner select list")]
    Ambiguous(Name),
}

/// Replaces every `0.x` in `selections` by the term bound to `x` in
/// `bindings`; other terms are kept as they are.
///
/// This is the substitution of the unnesting rewrite
/// `SELECT t̄:x̄ FROM query (SELECT ū:ȳ FROM T:σ WHERE c) : σ' WHERE TRUE`
/// ⇒ `SELECT (t̄:x̄)[0.σ' := ū] FROM T:σ WHERE c`, where the outer and inner
/// queries each bind exactly one table. The bound terms already live in the
/// inner query's context, and indices ≥ 1 denote the same scopes on both
/// sides, so nothing is shifted.
pub fn subst_select_list(
    selections: &[(Term, Name)],
    bindings: &[(Term, Name)],
) -> Result<Vec<(Term, Name)>, SubstError> {
    selections
        .iter()
        .map(|(t, x)| {
            let t = match t {
                Term::Var(0, a) => {
                    let mut hits = bindings.iter().filter(|(_, b)| b == a);
                    match (hits.next(), hits.next()) {
                        (Some((u, _)), None) => u.clone(),
                        (None, _) => return Err(SubstError::Unbound(a.clone())),
                        (Some(_), Some(_)) => return Err(SubstError::Ambiguous(a.clone())),
                    }
                }
                t => t.clone(),
            };
            Ok((t, x.clone()))
        })
        .collect()
}
