//! Finitely supported bags of fixed-arity tuples.
//!
//! A [`Relation`] is an ℕ-valued K-relation kept as a sorted row list: two
//! relations hold the same multiset exactly when their row vectors are equal,
//! so structural equality *is* extensional equality.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Deref;

use thiserror::Error;

/// A non-null constant. Ints sort before strings.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BaseConst {
    Int(i64),
    Str(String),
}

/// A cell value. `Null` is the least element of the order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Null,
    Const(BaseConst),
}

impl Value {
    pub fn int(i: i64) -> Self {
        Value::Const(BaseConst::Int(i))
    }

    pub fn str(s: impl Into<String>) -> Self {
        Value::Const(BaseConst::Str(s.into()))
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn as_const(&self) -> Option<&BaseConst> {
        match self {
            Value::Null => None,
            Value::Const(k) => Some(k),
        }
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::int(i)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::str(s)
    }
}

impl From<BaseConst> for Value {
    fn from(k: BaseConst) -> Self {
        Value::Const(k)
    }
}

impl fmt::Display for BaseConst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaseConst::Int(i) => write!(f, "{i}"),
            BaseConst::Str(s) => {
                f.write_str("'")?;
                for c in s.chars() {
                    if c == '\'' {
                        f.write_str("''")?;
                    } else {
                        write!(f, "{c}")?;
                    }
                }
                f.write_str("'")
            }
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("NULL"),
            Value::Const(k) => k.fmt(f),
        }
    }
}

/// A row of values, ordered lexicographically.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tuple(Vec<Value>);

impl Tuple {
    pub fn new(values: Vec<Value>) -> Self {
        Tuple(values)
    }

    pub fn empty() -> Self {
        Tuple(Vec::new())
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[Value] {
        &self.0
    }

    pub fn into_values(self) -> Vec<Value> {
        self.0
    }

    pub fn concat(&self, other: &Tuple) -> Tuple {
        let mut v = Vec::with_capacity(self.0.len() + other.0.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        Tuple(v)
    }

    /// Splits into the first `at` values and the rest.
    pub fn split_at(&self, at: usize) -> (Tuple, Tuple) {
        let (l, r) = self.0.split_at(at);
        (Tuple(l.to_vec()), Tuple(r.to_vec()))
    }
}

impl Deref for Tuple {
    type Target = [Value];

    fn deref(&self) -> &[Value] {
        &self.0
    }
}

impl From<Vec<Value>> for Tuple {
    fn from(v: Vec<Value>) -> Self {
        Tuple(v)
    }
}

impl FromIterator<Value> for Tuple {
    fn from_iter<I: IntoIterator<Item = Value>>(iter: I) -> Self {
        Tuple(iter.into_iter().collect())
    }
}

impl fmt::Display for Tuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            v.fmt(f)?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RelError {
    #[error("row {index} has arity {found}, expected {expected}")]
    RowArity {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("arity mismatch: {left} vs {right}")]
    ArityMismatch { left: usize, right: usize },
    #[error("mapping produced a tuple of arity {found}, expected {expected}")]
    MapArity { expected: usize, found: usize },
}

/// A finite multiset of `arity`-tuples in canonical (sorted) form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Relation {
    arity: usize,
    rows: Vec<Tuple>,
}

impl Relation {
    /// The empty relation of the given arity.
    pub fn empty(arity: usize) -> Self {
        Relation {
            arity,
            rows: Vec::new(),
        }
    }

    /// The empty 0-ary relation.
    pub fn nil() -> Self {
        Relation::empty(0)
    }

    /// One copy of the empty tuple.
    pub fn one() -> Self {
        Relation {
            arity: 0,
            rows: vec![Tuple::empty()],
        }
    }

    pub fn from_rows(arity: usize, rows: Vec<Tuple>) -> Result<Self, RelError> {
        if let Some((index, t)) = rows.iter().enumerate().find(|(_, t)| t.arity() != arity) {
            return Err(RelError::RowArity {
                index,
                expected: arity,
                found: t.arity(),
            });
        }
        Ok(Relation::sorted(arity, rows))
    }

    fn sorted(arity: usize, mut rows: Vec<Tuple>) -> Self {
        rows.sort_unstable();
        let r = Relation { arity, rows };
        debug_assert!(r.is_canonical());
        r
    }

    fn is_canonical(&self) -> bool {
        self.rows.iter().all(|t| t.arity() == self.arity) && self.rows.windows(2).all(|w| w[0] <= w[1])
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// All rows with repetitions, in canonical order.
    pub fn rows(&self) -> &[Tuple] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Distinct tuples paired with their multiplicity, in canonical order.
    pub fn groups(&self) -> Groups<'_> {
        Groups {
            rows: &self.rows,
            pos: 0,
        }
    }

    fn check_arity(&self, other: usize) -> Result<(), RelError> {
        if self.arity == other {
            Ok(())
        } else {
            Err(RelError::ArityMismatch {
                left: self.arity,
                right: other,
            })
        }
    }

    fn count(&self, t: &Tuple) -> usize {
        let lo = self.rows.partition_point(|r| r < t);
        let hi = self.rows.partition_point(|r| r <= t);
        hi - lo
    }

    /// Multiplicity of `t`. Comparison is syntactic: `NULL` matches `NULL`.
    pub fn memb(&self, t: &Tuple) -> Result<usize, RelError> {
        self.check_arity(t.arity())?;
        Ok(self.count(t))
    }

    pub fn plus(&self, other: &Relation) -> Result<Relation, RelError> {
        self.check_arity(other.arity)?;
        let mut rows = Vec::with_capacity(self.rows.len() + other.rows.len());
        let (mut a, mut b) = (self.rows.iter().peekable(), other.rows.iter().peekable());
        loop {
            match (a.peek(), b.peek()) {
                (Some(x), Some(y)) => {
                    if x <= y {
                        rows.push(a.next().unwrap().clone());
                    } else {
                        rows.push(b.next().unwrap().clone());
                    }
                }
                (Some(_), None) => rows.extend(a.by_ref().cloned()),
                (None, Some(_)) => rows.extend(b.by_ref().cloned()),
                (None, None) => break,
            }
        }
        Ok(self.canonical(rows))
    }

    /// Truncated difference of multiplicities.
    pub fn minus(&self, other: &Relation) -> Result<Relation, RelError> {
        self.merge_counts(other, |m, n| m.saturating_sub(n))
    }

    /// Pointwise minimum of multiplicities.
    pub fn inter(&self, other: &Relation) -> Result<Relation, RelError> {
        self.merge_counts(other, |m, n| m.min(n))
    }

    fn merge_counts(&self, other: &Relation, combine: impl Fn(usize, usize) -> usize) -> Result<Relation, RelError> {
        self.check_arity(other.arity)?;
        let mut rows = Vec::new();
        let (mut a, mut b) = (self.groups().peekable(), other.groups().peekable());
        loop {
            let (t, m, n) = match (a.peek(), b.peek()) {
                (Some(&(x, m)), Some(&(y, n))) => match x.cmp(y) {
                    Ordering::Less => {
                        a.next();
                        (x, m, 0)
                    }
                    Ordering::Greater => {
                        b.next();
                        (y, 0, n)
                    }
                    Ordering::Equal => {
                        a.next();
                        b.next();
                        (x, m, n)
                    }
                },
                (Some(&(x, m)), None) => {
                    a.next();
                    (x, m, 0)
                }
                (None, Some(&(y, n))) => {
                    b.next();
                    (y, 0, n)
                }
                (None, None) => break,
            };
            rows.extend(std::iter::repeat_n(t, combine(m, n)).cloned());
        }
        Ok(self.canonical(rows))
    }

    /// Cartesian product; columns of `self` come first.
    pub fn times(&self, other: &Relation) -> Relation {
        let mut rows = Vec::with_capacity(self.rows.len() * other.rows.len());
        for (x, m) in self.groups() {
            for (y, n) in other.groups() {
                rows.extend(std::iter::repeat_n(x.concat(y), m * n));
            }
        }
        // grouped nesting keeps the concatenations sorted
        Relation {
            arity: self.arity + other.arity,
            rows,
        }
        .debug_checked()
    }

    /// Bag comprehension: every row `x` contributes `f(x)` with the same
    /// multiplicity. `f` is called once per distinct tuple.
    pub fn sum<F>(&self, out_arity: usize, mut f: F) -> Result<Relation, RelError>
    where
        F: FnMut(&Tuple) -> Tuple,
    {
        let mut rows = Vec::with_capacity(self.rows.len());
        for (x, m) in self.groups() {
            let y = f(x);
            if y.arity() != out_arity {
                return Err(RelError::MapArity {
                    expected: out_arity,
                    found: y.arity(),
                });
            }
            rows.extend(std::iter::repeat_n(y, m));
        }
        Ok(Relation::sorted(out_arity, rows))
    }

    /// Keeps the rows satisfying `p`, with their multiplicities.
    pub fn sel<P>(&self, mut p: P) -> Relation
    where
        P: FnMut(&Tuple) -> bool,
    {
        let mut rows = Vec::new();
        for (x, m) in self.groups() {
            if p(x) {
                rows.extend(std::iter::repeat_n(x, m).cloned());
            }
        }
        self.canonical(rows)
    }

    /// Duplicate elimination.
    pub fn flat(&self) -> Relation {
        let rows = self.groups().map(|(t, _)| t.clone()).collect();
        self.canonical(rows)
    }

    /// The support without duplicates, in canonical order.
    pub fn supp(&self) -> Vec<Tuple> {
        self.groups().map(|(t, _)| t.clone()).collect()
    }

    /// Number of rows counted with multiplicity.
    pub fn card(&self) -> usize {
        self.rows.len()
    }

    // rows already sorted by construction
    fn canonical(&self, rows: Vec<Tuple>) -> Relation {
        Relation {
            arity: self.arity,
            rows,
        }
        .debug_checked()
    }

    fn debug_checked(self) -> Relation {
        debug_assert!(self.is_canonical());
        self
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, t) in self.rows.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            t.fmt(f)?;
        }
        f.write_str("}")
    }
}

pub struct Groups<'a> {
    rows: &'a [Tuple],
    pos: usize,
}

impl<'a> Iterator for Groups<'a> {
    type Item = (&'a Tuple, usize);

    fn next(&mut self) -> Option<Self::Item> {
        let head = self.rows.get(self.pos)?;
        let run = self.rows[self.pos..].iter().take_while(|t| *t == head).count();
        self.pos += run;
        Some((head, run))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(vals: &[Option<i64>]) -> Tuple {
        vals.iter().map(|v| v.map_or(Value::Null, Value::int)).collect()
    }

    fn rel(arity: usize, rows: &[&[Option<i64>]]) -> Relation {
        Relation::from_rows(arity, rows.iter().map(|r| t(r)).collect()).unwrap()
    }

    const N: Option<i64> = None;

    #[test]
    fn value_order_is_null_int_str() {
        assert!(Value::Null < Value::int(i64::MIN));
        assert!(Value::int(i64::MAX) < Value::str(""));
        assert!(Value::str("a") < Value::str("b"));
        assert!(Value::int(-1) < Value::int(0));
    }

    #[test]
    fn from_rows_sorts() {
        let r = rel(1, &[&[Some(2)], &[Some(1)], &[Some(2)]]);
        assert_eq!(r.rows(), &[t(&[Some(1)]), t(&[Some(2)]), t(&[Some(2)])]);
        assert_eq!(Relation::from_rows(0, vec![]).unwrap(), Relation::nil());
        let r = rel(2, &[&[Some(1), N]]);
        assert_eq!(r.rows(), &[t(&[Some(1), N])]);
    }

    #[test]
    fn from_rows_names_bad_row() {
        let err = Relation::from_rows(1, vec![t(&[Some(1)]), t(&[Some(1), Some(2)])]).unwrap_err();
        assert_eq!(
            err,
            RelError::RowArity {
                index: 1,
                expected: 1,
                found: 2
            }
        );
    }

    #[test]
    fn memb_counts() {
        let r = rel(1, &[&[Some(1)], &[Some(1)], &[Some(2)]]);
        assert_eq!(r.memb(&t(&[Some(1)])).unwrap(), 2);
        assert_eq!(rel(1, &[&[Some(1)]]).memb(&t(&[N])).unwrap(), 0);
        assert_eq!(Relation::nil().memb(&Tuple::empty()).unwrap(), 0);
        assert!(r.memb(&Tuple::empty()).is_err());
    }

    #[test]
    fn plus_minus_inter() {
        let a = rel(1, &[&[Some(1)]]);
        let b = rel(1, &[&[Some(1)], &[Some(2)]]);
        assert_eq!(a.plus(&b).unwrap(), rel(1, &[&[Some(1)], &[Some(1)], &[Some(2)]]));
        assert_eq!(b.plus(&Relation::empty(1)).unwrap(), b);
        let nn = rel(1, &[&[N]]);
        assert_eq!(nn.plus(&nn).unwrap(), rel(1, &[&[N], &[N]]));

        let two = rel(1, &[&[Some(1)], &[Some(1)]]);
        let three = rel(1, &[&[Some(1)], &[Some(1)], &[Some(1)]]);
        assert_eq!(two.minus(&three).unwrap(), Relation::empty(1));
        assert_eq!(b.minus(&rel(1, &[&[Some(2)]])).unwrap(), a);
        assert_eq!(rel(1, &[&[Some(1)], &[N]]).minus(&nn).unwrap(), a);

        assert_eq!(two.inter(&a).unwrap(), a);
        assert_eq!(b.inter(&b).unwrap(), b);
        assert_eq!(a.inter(&rel(1, &[&[Some(2)]])).unwrap(), Relation::empty(1));
        assert!(a.plus(&Relation::nil()).is_err());
        assert!(a.minus(&Relation::nil()).is_err());
        assert!(a.inter(&Relation::nil()).is_err());
    }

    #[test]
    fn times_units() {
        let a = rel(1, &[&[Some(1)], &[Some(1)]]);
        let b = rel(1, &[&[Some(2)]]);
        assert_eq!(a.times(&b), rel(2, &[&[Some(1), Some(2)], &[Some(1), Some(2)]]));
        assert_eq!(a.times(&Relation::one()), a);
        assert_eq!(a.times(&Relation::nil()), Relation::empty(1));
    }

    #[test]
    fn sum_sel_flat() {
        let r = rel(2, &[&[Some(1), Some(2)], &[Some(3), Some(4)]]);
        let proj = r.sum(1, |x| x.split_at(1).0).unwrap();
        assert_eq!(proj, rel(1, &[&[Some(1)], &[Some(3)]]));

        let r = rel(1, &[&[Some(1)], &[Some(2)], &[Some(2)]]);
        let c = r.sum(0, |_| Tuple::empty()).unwrap();
        assert_eq!(c.memb(&Tuple::empty()).unwrap(), 3);
        assert_eq!(
            Relation::empty(3).sum(1, |x| x.split_at(1).0).unwrap(),
            Relation::empty(1)
        );
        assert!(r.sum(2, |x| x.clone()).is_err());

        let big = r.sel(|x| x[0] > Value::int(1));
        assert_eq!(big, rel(1, &[&[Some(2)], &[Some(2)]]));
        assert_eq!(r.sel(|_| true), r);
        assert_eq!(r.sel(|_| false), Relation::empty(1));

        assert_eq!(r.flat(), rel(1, &[&[Some(1)], &[Some(2)]]));
        assert_eq!(r.flat().flat(), r.flat());
        assert_eq!(Relation::empty(1).flat(), Relation::empty(1));
    }

    #[test]
    fn supp_and_card() {
        let r = rel(1, &[&[Some(1)], &[Some(1)], &[Some(2)]]);
        assert_eq!(r.supp(), vec![t(&[Some(1)]), t(&[Some(2)])]);
        assert!(Relation::empty(2).supp().is_empty());
        assert_eq!(r.card(), 3);
        assert_eq!(Relation::one().card(), 1);
        let total: usize = r.supp().iter().map(|x| r.memb(x).unwrap()).sum();
        assert_eq!(r.card(), total);
    }

    #[test]
    fn display() {
        let r = Relation::from_rows(2, vec![vec![Value::Null, Value::str("it's")].into()]).unwrap();
        assert_eq!(r.to_string(), "{(NULL, 'it''s')}");
    }
}
