//! Variable contexts, multi-indices and jet variables.
//!
//! A [`Context`] fixes the ordered lists of independent and dependent
//! variable names. Everything else refers to variables through indices into
//! these lists, so two expressions are compatible exactly when their contexts
//! compare equal.

use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

/// Names reserved for the expression grammar.
const RESERVED: [&str; 2] = ["sin", "cos"];

/// Ordered lists of independent and dependent variable names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Context {
    indep: Vec<String>,
    dep: Vec<String>,
}

impl Context {
    /// Builds a context, checking that names are well formed and unique
    /// across both lists.
    ///
    /// Names must start with an ASCII letter and contain only ASCII
    /// alphanumerics; `sin` and `cos` are reserved. Underscores are not
    /// allowed because the expression grammar uses `_` for jet subscripts.
    pub fn new<S: AsRef<str>>(indep: &[S], dep: &[S]) -> Result<Context> {
        if indep.is_empty() || dep.is_empty() {
            return Err(Error::EmptyContext);
        }
        let mut seen: Vec<&str> = Vec::new();
        for name in indep.iter().chain(dep.iter()) {
            let name = name.as_ref();
            let mut chars = name.chars();
            let head_ok = chars.next().is_some_and(|c| c.is_ascii_alphabetic());
            if !head_ok || !name.chars().all(|c| c.is_ascii_alphanumeric()) {
                return Err(Error::InvalidName(name.to_owned()));
            }
            if RESERVED.contains(&name) {
                return Err(Error::InvalidName(name.to_owned()));
            }
            if seen.contains(&name) {
                return Err(Error::DuplicateName(name.to_owned()));
            }
            seen.push(name);
        }
        Ok(Context {
            indep: indep.iter().map(|s| s.as_ref().to_owned()).collect(),
            dep: dep.iter().map(|s| s.as_ref().to_owned()).collect(),
        })
    }

    /// Convenience constructor returning the shared handle used by
    /// expressions.
    pub fn shared<S: AsRef<str>>(indep: &[S], dep: &[S]) -> Result<Arc<Context>> {
        Ok(Arc::new(Context::new(indep, dep)?))
    }

    /// Number of independent variables.
    pub fn indep_count(&self) -> usize {
        self.indep.len()
    }

    /// Number of dependent variables.
    pub fn dep_count(&self) -> usize {
        self.dep.len()
    }

    pub fn indep_name(&self, j: usize) -> &str {
        &self.indep[j]
    }

    pub fn dep_name(&self, alpha: usize) -> &str {
        &self.dep[alpha]
    }

    pub fn indep_names(&self) -> &[String] {
        &self.indep
    }

    pub fn dep_names(&self) -> &[String] {
        &self.dep
    }

    /// Index of an independent variable by name.
    pub fn indep_index(&self, name: &str) -> Option<usize> {
        self.indep.iter().position(|n| n == name)
    }

    /// Index of a dependent variable by name.
    pub fn dep_index(&self, name: &str) -> Option<usize> {
        self.dep.iter().position(|n| n == name)
    }

    /// Checks an independent-variable index.
    pub fn check_indep(&self, j: usize) -> Result<()> {
        if j < self.indep.len() {
            Ok(())
        } else {
            Err(Error::IndepIndexOutOfRange {
                index: j,
                dim: self.indep.len(),
            })
        }
    }

    /// Checks a dependent-variable index.
    pub fn check_dep(&self, alpha: usize) -> Result<()> {
        if alpha < self.dep.len() {
            Ok(())
        } else {
            Err(Error::DepIndexOutOfRange {
                index: alpha,
                count: self.dep.len(),
            })
        }
    }

    /// True when every independent variable has a single-character name, in
    /// which case jet variables render in subscript notation.
    pub fn subscript_friendly(&self) -> bool {
        self.indep.iter().all(|n| n.chars().count() == 1)
    }
}

/// A tuple of derivative counts, one per independent variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    counts: Vec<u32>,
}

impl MultiIndex {
    pub fn new(counts: Vec<u32>) -> MultiIndex {
        MultiIndex { counts }
    }

    /// The zero multi-index of the given length.
    pub fn zero(len: usize) -> MultiIndex {
        MultiIndex {
            counts: vec![0; len],
        }
    }

    /// The unit multi-index e_j.
    pub fn unit(len: usize, j: usize) -> MultiIndex {
        let mut counts = vec![0; len];
        counts[j] += 1;
        MultiIndex { counts }
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn get(&self, j: usize) -> u32 {
        self.counts[j]
    }

    /// Total order |I| (sum of the entries).
    pub fn order(&self) -> u32 {
        self.counts.iter().sum()
    }

    /// Componentwise sum.
    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.len(), other.len());
        MultiIndex {
            counts: self
                .counts
                .iter()
                .zip(&other.counts)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// The multi-index with the j-th entry incremented.
    pub fn bump(&self, j: usize) -> MultiIndex {
        let mut counts = self.counts.clone();
        counts[j] += 1;
        MultiIndex { counts }
    }

    /// Componentwise difference, defined only when `self >= other` in every
    /// entry.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        if self.len() != other.len() {
            return None;
        }
        let mut counts = Vec::with_capacity(self.len());
        for (a, b) in self.counts.iter().zip(&other.counts) {
            counts.push(a.checked_sub(*b)?);
        }
        Some(MultiIndex { counts })
    }

    /// True when `other <= self` componentwise.
    pub fn dominates(&self, other: &MultiIndex) -> bool {
        self.len() == other.len()
            && self
                .counts
                .iter()
                .zip(&other.counts)
                .all(|(a, b)| a >= b)
    }

    /// Componentwise maximum.
    pub fn max_with(&self, other: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.len(), other.len());
        MultiIndex {
            counts: self
                .counts
                .iter()
                .zip(&other.counts)
                .map(|(a, b)| *a.max(b))
                .collect(),
        }
    }
}

/// Graded order: lower total order first; within a grade the index with more
/// derivatives in an earlier direction comes first, so in two variables the
/// sequence runs (0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ...
impl Ord for MultiIndex {
    fn cmp(&self, other: &MultiIndex) -> Ordering {
        self.order()
            .cmp(&other.order())
            .then_with(|| {
                for (a, b) in self.counts.iter().zip(&other.counts) {
                    match b.cmp(a) {
                        Ordering::Equal => continue,
                        ord => return ord,
                    }
                }
                Ordering::Equal
            })
            .then_with(|| self.counts.len().cmp(&other.counts.len()))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &MultiIndex) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.counts.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// A jet variable u^alpha_I: dependent-variable index plus multi-index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JetVar {
    pub dep: usize,
    pub idx: MultiIndex,
}

impl JetVar {
    pub fn new(dep: usize, idx: MultiIndex) -> JetVar {
        JetVar { dep, idx }
    }

    /// The undifferentiated variable u^alpha.
    pub fn base(dep: usize, dim: usize) -> JetVar {
        JetVar {
            dep,
            idx: MultiIndex::zero(dim),
        }
    }

    pub fn order(&self) -> u32 {
        self.idx.order()
    }

    /// Renders the variable using the context's names: subscript notation
    /// when every independent name is a single character, bracket notation
    /// otherwise.
    pub fn render(&self, ctx: &Context) -> String {
        let name = ctx.dep_name(self.dep);
        if self.idx.order() == 0 {
            return name.to_owned();
        }
        if ctx.subscript_friendly() {
            let mut s = String::from(name);
            s.push('_');
            for (j, count) in self.idx.counts().iter().enumerate() {
                for _ in 0..*count {
                    s.push_str(ctx.indep_name(j));
                }
            }
            s
        } else {
            let counts: Vec<String> = self
                .idx
                .counts()
                .iter()
                .map(|c| c.to_string())
                .collect();
            format!("{}[{}]", name, counts.join(","))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn context_rejects_bad_names() {
        assert!(Context::new(&["x", "y"], &["u"]).is_ok());
        assert!(matches!(
            Context::new(&["x", "x"], &["u"]),
            Err(Error::DuplicateName(_))
        ));
        assert!(matches!(
            Context::new(&["x"], &["x"]),
            Err(Error::DuplicateName(_))
        ));
        assert!(matches!(
            Context::new(&["x_1"], &["u"]),
            Err(Error::InvalidName(_))
        ));
        assert!(matches!(
            Context::new(&["x"], &["sin"]),
            Err(Error::InvalidName(_))
        ));
        let empty: &[&str] = &[];
        assert!(matches!(
            Context::new(empty, &["u"]),
            Err(Error::EmptyContext)
        ));
    }

    #[test]
    fn graded_order_sorts_naturally() {
        let mk = |c: &[u32]| MultiIndex::new(c.to_vec());
        let mut v = vec![
            mk(&[0, 2, 0]),
            mk(&[1, 0, 0]),
            mk(&[0, 0, 0]),
            mk(&[1, 1, 0]),
            mk(&[2, 0, 0]),
            mk(&[0, 1, 0]),
            mk(&[1, 0, 1]),
        ];
        v.sort();
        let expected = vec![
            mk(&[0, 0, 0]),
            mk(&[1, 0, 0]),
            mk(&[0, 1, 0]),
            mk(&[2, 0, 0]),
            mk(&[1, 1, 0]),
            mk(&[1, 0, 1]),
            mk(&[0, 2, 0]),
        ];
        assert_eq!(v, expected);
    }

    #[test]
    fn multi_index_arithmetic() {
        let a = MultiIndex::new(vec![2, 1, 0]);
        let b = MultiIndex::new(vec![1, 1, 0]);
        assert_eq!(a.checked_sub(&b), Some(MultiIndex::new(vec![1, 0, 0])));
        assert_eq!(b.checked_sub(&a), None);
        assert!(a.dominates(&b));
        assert!(!b.dominates(&a));
        assert_eq!(a.order(), 3);
        assert_eq!(a.bump(2), MultiIndex::new(vec![2, 1, 1]));
    }

    #[test]
    fn jet_var_rendering() {
        let ctx = Context::new(&["x", "y", "z"], &["u"]).unwrap();
        let v = JetVar::new(0, MultiIndex::new(vec![2, 1, 0]));
        assert_eq!(v.render(&ctx), "u_xxy");
        let base = JetVar::base(0, 3);
        assert_eq!(base.render(&ctx), "u");

        let wide = Context::new(&["x1", "y"], &["u"]).unwrap();
        let w = JetVar::new(0, MultiIndex::new(vec![1, 2]));
        assert_eq!(w.render(&wide), "u[1,2]");
    }
}
