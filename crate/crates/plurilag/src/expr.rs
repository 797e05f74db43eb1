//! Canonical differential functions.
//!
//! An [`Expr`] is a sum of monomials with exact rational coefficients; each
//! monomial is a product of powers of atoms, where an atom is a jet variable
//! or `sin`/`cos` of an undifferentiated dependent variable. The term list is
//! kept sorted with like terms merged, and `cos^2` is eagerly rewritten to
//! `1 - sin^2`, so equality of canonical forms decides equality of the
//! functions they denote. The zero function is the empty term list.
//!
//! Expressions are autonomous: independent variables never occur explicitly,
//! only through jet variables.

use crate::context::{Context, JetVar, MultiIndex};
use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// A multiplicative atom.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    /// A jet variable u^alpha_I.
    Jet(JetVar),
    /// sin of the undifferentiated dependent variable with this index.
    Sin(usize),
    /// cos of the undifferentiated dependent variable with this index.
    Cos(usize),
}

impl Atom {
    fn render(&self, ctx: &Context) -> String {
        match self {
            Atom::Jet(v) => v.render(ctx),
            Atom::Sin(d) => format!("sin({})", ctx.dep_name(*d)),
            Atom::Cos(d) => format!("cos({})", ctx.dep_name(*d)),
        }
    }
}

/// A product of atom powers with a nonzero rational coefficient.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Monomial {
    coeff: BigRational,
    factors: Vec<(Atom, u32)>,
}

impl Monomial {
    pub fn coeff(&self) -> &BigRational {
        &self.coeff
    }

    /// Sorted list of (atom, power) pairs; powers are at least 1.
    pub fn factors(&self) -> &[(Atom, u32)] {
        &self.factors
    }

    /// Total degree counting only jet-variable factors.
    pub fn jet_degree(&self) -> u32 {
        self.factors
            .iter()
            .map(|(a, p)| if matches!(a, Atom::Jet(_)) { *p } else { 0 })
            .sum()
    }
}

/// Accumulates terms keyed by factor list; the single place where the
/// canonical-form invariants (merged like terms, no `cos^2`) are enforced.
#[derive(Default)]
struct Accum {
    map: BTreeMap<Vec<(Atom, u32)>, BigRational>,
}

impl Accum {
    fn new() -> Accum {
        Accum::default()
    }

    /// Adds coeff * factors. `factors` must be sorted with distinct atoms;
    /// any `cos^k` with k >= 2 is rewritten via cos^2 = 1 - sin^2 before the
    /// term is stored.
    fn add_term(&mut self, coeff: BigRational, factors: Vec<(Atom, u32)>) {
        if coeff.is_zero() {
            return;
        }
        if let Some(pos) = factors
            .iter()
            .position(|(a, p)| matches!(a, Atom::Cos(_)) && *p >= 2)
        {
            let dep = match factors[pos].0 {
                Atom::Cos(d) => d,
                _ => unreachable!(),
            };
            // branch 1: drop cos^2
            let mut plain = factors.clone();
            if plain[pos].1 == 2 {
                plain.remove(pos);
            } else {
                plain[pos].1 -= 2;
            }
            self.add_term(coeff.clone(), plain.clone());
            // branch 2: -sin^2 in its place
            let mut swapped = plain;
            merge_factor(&mut swapped, Atom::Sin(dep), 2);
            self.add_term(-coeff, swapped);
            return;
        }
        let entry = self.map.entry(factors).or_insert_with(BigRational::zero);
        *entry += coeff;
    }

    fn add_monomial(&mut self, m: &Monomial) {
        self.add_term(m.coeff.clone(), m.factors.clone());
    }

    fn into_terms(self) -> Vec<Monomial> {
        self.map
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(factors, coeff)| Monomial { coeff, factors })
            .collect()
    }
}

/// Inserts `atom^power` into a sorted factor list, merging powers.
fn merge_factor(factors: &mut Vec<(Atom, u32)>, atom: Atom, power: u32) {
    if power == 0 {
        return;
    }
    match factors.binary_search_by(|(a, _)| a.cmp(&atom)) {
        Ok(i) => factors[i].1 += power,
        Err(i) => factors.insert(i, (atom, power)),
    }
}

/// Merges two sorted factor lists.
fn merge_factor_lists(a: &[(Atom, u32)], b: &[(Atom, u32)]) -> Vec<(Atom, u32)> {
    let mut out = a.to_vec();
    for (atom, power) in b {
        merge_factor(&mut out, atom.clone(), *power);
    }
    out
}

/// Per-dependent-variable derivative bounds of an expression; see
/// [`Expr::max_order`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderProfile {
    /// Componentwise maximum multi-index per dependent variable.
    pub per_dep: Vec<MultiIndex>,
    /// Maximal total order of any jet variable present.
    pub total: u32,
}

/// A canonical differential function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expr {
    ctx: Arc<Context>,
    terms: Vec<Monomial>,
}

impl Expr {
    /// The zero function.
    pub fn zero(ctx: &Arc<Context>) -> Expr {
        Expr {
            ctx: ctx.clone(),
            terms: Vec::new(),
        }
    }

    /// A constant function.
    pub fn constant(ctx: &Arc<Context>, value: BigRational) -> Expr {
        let mut acc = Accum::new();
        acc.add_term(value, Vec::new());
        Expr {
            ctx: ctx.clone(),
            terms: acc.into_terms(),
        }
    }

    /// A constant from an integer.
    pub fn integer(ctx: &Arc<Context>, value: i64) -> Expr {
        Expr::constant(ctx, BigRational::from_integer(BigInt::from(value)))
    }

    /// The expression consisting of a single jet variable.
    pub fn jet(ctx: &Arc<Context>, var: JetVar) -> Result<Expr> {
        ctx.check_dep(var.dep)?;
        if var.idx.len() != ctx.indep_count() {
            return Err(Error::ContextMismatch);
        }
        let mut acc = Accum::new();
        acc.add_term(BigRational::one(), vec![(Atom::Jet(var), 1)]);
        Ok(Expr {
            ctx: ctx.clone(),
            terms: acc.into_terms(),
        })
    }

    /// sin of a dependent variable.
    pub fn sin(ctx: &Arc<Context>, dep: usize) -> Result<Expr> {
        ctx.check_dep(dep)?;
        let mut acc = Accum::new();
        acc.add_term(BigRational::one(), vec![(Atom::Sin(dep), 1)]);
        Ok(Expr {
            ctx: ctx.clone(),
            terms: acc.into_terms(),
        })
    }

    /// cos of a dependent variable.
    pub fn cos(ctx: &Arc<Context>, dep: usize) -> Result<Expr> {
        ctx.check_dep(dep)?;
        let mut acc = Accum::new();
        acc.add_term(BigRational::one(), vec![(Atom::Cos(dep), 1)]);
        Ok(Expr {
            ctx: ctx.clone(),
            terms: acc.into_terms(),
        })
    }

    pub fn context(&self) -> &Arc<Context> {
        &self.ctx
    }

    /// Canonical term list, sorted by factor list.
    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// True when the expression is a constant (possibly zero).
    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|m| m.factors.is_empty())
    }

    fn check_same_context(&self, other: &Expr) -> Result<()> {
        if Arc::ptr_eq(&self.ctx, &other.ctx) || self.ctx == other.ctx {
            Ok(())
        } else {
            Err(Error::ContextMismatch)
        }
    }

    pub fn add(&self, other: &Expr) -> Result<Expr> {
        self.check_same_context(other)?;
        let mut acc = Accum::new();
        for m in &self.terms {
            acc.add_monomial(m);
        }
        for m in &other.terms {
            acc.add_monomial(m);
        }
        Ok(Expr {
            ctx: self.ctx.clone(),
            terms: acc.into_terms(),
        })
    }

    pub fn sub(&self, other: &Expr) -> Result<Expr> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Expr {
        self.scale(&-BigRational::one())
    }

    /// Multiplies by a rational constant.
    pub fn scale(&self, factor: &BigRational) -> Expr {
        if factor.is_zero() {
            return Expr::zero(&self.ctx);
        }
        Expr {
            ctx: self.ctx.clone(),
            terms: self
                .terms
                .iter()
                .map(|m| Monomial {
                    coeff: &m.coeff * factor,
                    factors: m.factors.clone(),
                })
                .collect(),
        }
    }

    pub fn mul(&self, other: &Expr) -> Result<Expr> {
        self.check_same_context(other)?;
        let mut acc = Accum::new();
        for a in &self.terms {
            for b in &other.terms {
                acc.add_term(
                    &a.coeff * &b.coeff,
                    merge_factor_lists(&a.factors, &b.factors),
                );
            }
        }
        Ok(Expr {
            ctx: self.ctx.clone(),
            terms: acc.into_terms(),
        })
    }

    /// Non-negative integer power; `pow(0)` is the constant 1.
    pub fn pow(&self, exp: u32) -> Expr {
        let mut result = Expr::constant(&self.ctx, BigRational::one());
        let mut base = self.clone();
        let mut e = exp;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base).expect("same context");
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base).expect("same context");
            }
        }
        result
    }

    /// The jet variables the expression genuinely depends on: every jet atom
    /// present, plus the undifferentiated variable of any dependent variable
    /// appearing inside sin or cos.
    pub fn dependent_vars(&self) -> Vec<JetVar> {
        let mut set: Vec<JetVar> = Vec::new();
        let dim = self.ctx.indep_count();
        for m in &self.terms {
            for (atom, _) in &m.factors {
                let v = match atom {
                    Atom::Jet(v) => v.clone(),
                    Atom::Sin(d) | Atom::Cos(d) => JetVar::base(*d, dim),
                };
                if let Err(pos) = set.binary_search(&v) {
                    set.insert(pos, v);
                }
            }
        }
        set
    }

    /// Formal partial derivative with respect to a jet variable.
    ///
    /// Atoms are treated as independent symbols, except that differentiating
    /// by an order-0 variable also acts on its trig atoms: d(sin u)/du =
    /// cos u and d(cos u)/du = -sin u.
    ///
    /// Panics if the variable does not fit the expression's context; that is
    /// a programming error, not an input condition.
    pub fn partial(&self, var: &JetVar) -> Expr {
        assert_eq!(
            var.idx.len(),
            self.ctx.indep_count(),
            "jet variable has wrong multi-index length for this context"
        );
        assert!(var.dep < self.ctx.dep_count(), "dependent index out of range");
        let order_zero = var.order() == 0;
        let mut acc = Accum::new();
        for m in &self.terms {
            for (i, (atom, power)) in m.factors.iter().enumerate() {
                // derivative of this atom with respect to var
                let datom: Option<(BigRational, Option<Atom>)> = match atom {
                    Atom::Jet(v) if v == var => Some((BigRational::one(), None)),
                    Atom::Sin(d) if order_zero && *d == var.dep => {
                        Some((BigRational::one(), Some(Atom::Cos(*d))))
                    }
                    Atom::Cos(d) if order_zero && *d == var.dep => {
                        Some((-BigRational::one(), Some(Atom::Sin(*d))))
                    }
                    _ => None,
                };
                let Some((sign, replacement)) = datom else {
                    continue;
                };
                // power rule: coeff * power * atom^(power-1) * d(atom) * rest
                let mut factors: Vec<(Atom, u32)> = Vec::with_capacity(m.factors.len() + 1);
                for (k, (a, p)) in m.factors.iter().enumerate() {
                    let p = if k == i { *p - 1 } else { *p };
                    if p > 0 {
                        factors.push((a.clone(), p));
                    }
                }
                if let Some(rep) = replacement {
                    merge_factor(&mut factors, rep, 1);
                }
                let coeff = &m.coeff * BigRational::from_integer(BigInt::from(*power)) * sign;
                acc.add_term(coeff, factors);
            }
        }
        Expr {
            ctx: self.ctx.clone(),
            terms: acc.into_terms(),
        }
    }

    /// Componentwise maximum multi-index per dependent variable and the
    /// maximal total order; trig atoms count as order 0.
    pub fn max_order(&self) -> OrderProfile {
        let dim = self.ctx.indep_count();
        let mut per_dep = vec![MultiIndex::zero(dim); self.ctx.dep_count()];
        let mut total = 0;
        for m in &self.terms {
            for (atom, _) in &m.factors {
                if let Atom::Jet(v) = atom {
                    per_dep[v.dep] = per_dep[v.dep].max_with(&v.idx);
                    total = total.max(v.idx.order());
                }
            }
        }
        OrderProfile { per_dep, total }
    }

    /// Replaces every occurrence of a jet variable by an expression.
    pub fn substitute_jet(&self, var: &JetVar, replacement: &Expr) -> Result<Expr> {
        self.check_same_context(replacement)?;
        let target = Atom::Jet(var.clone());
        let mut result = Expr::zero(&self.ctx);
        for m in &self.terms {
            let mut power = 0;
            let mut rest: Vec<(Atom, u32)> = Vec::with_capacity(m.factors.len());
            for (a, p) in &m.factors {
                if *a == target {
                    power = *p;
                } else {
                    rest.push((a.clone(), *p));
                }
            }
            let mut acc = Accum::new();
            acc.add_term(m.coeff.clone(), rest);
            let base = Expr {
                ctx: self.ctx.clone(),
                terms: acc.into_terms(),
            };
            let term = if power == 0 {
                base
            } else {
                base.mul(&replacement.pow(power))?
            };
            result = result.add(&term)?;
        }
        Ok(result)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, m) in self.terms.iter().enumerate() {
            let negative = m.coeff.is_negative();
            if i == 0 {
                if negative {
                    write!(f, "-")?;
                }
            } else if negative {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let magnitude = m.coeff.abs();
            let mut pieces: Vec<String> = Vec::new();
            if !magnitude.is_one() || m.factors.is_empty() {
                pieces.push(render_rational(&magnitude));
            }
            for (atom, power) in &m.factors {
                let rendered = atom.render(&self.ctx);
                if *power == 1 {
                    pieces.push(rendered);
                } else {
                    pieces.push(format!("{rendered}^{power}"));
                }
            }
            write!(f, "{}", pieces.join("*"))?;
        }
        Ok(())
    }
}

fn render_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// An unnormalized expression tree, the input of [`normalize`].
#[derive(Debug, Clone)]
pub enum ExprTree {
    Rational(BigRational),
    Jet(JetVar),
    Sin(usize),
    Cos(usize),
    Neg(Box<ExprTree>),
    Add(Box<ExprTree>, Box<ExprTree>),
    Sub(Box<ExprTree>, Box<ExprTree>),
    Mul(Box<ExprTree>, Box<ExprTree>),
    Pow(Box<ExprTree>, i64),
}

impl ExprTree {
    pub fn integer(v: i64) -> ExprTree {
        ExprTree::Rational(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn ratio(num: i64, den: i64) -> ExprTree {
        ExprTree::Rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }
}

/// Folds a raw tree into canonical form. Idempotent in the sense that the
/// tree of a canonical expression normalizes to that expression; independent
/// of the association and ordering of the input.
pub fn normalize(ctx: &Arc<Context>, tree: &ExprTree) -> Result<Expr> {
    match tree {
        ExprTree::Rational(r) => Ok(Expr::constant(ctx, r.clone())),
        ExprTree::Jet(v) => Expr::jet(ctx, v.clone()),
        ExprTree::Sin(d) => Expr::sin(ctx, *d),
        ExprTree::Cos(d) => Expr::cos(ctx, *d),
        ExprTree::Neg(t) => Ok(normalize(ctx, t)?.neg()),
        ExprTree::Add(a, b) => normalize(ctx, a)?.add(&normalize(ctx, b)?),
        ExprTree::Sub(a, b) => normalize(ctx, a)?.sub(&normalize(ctx, b)?),
        ExprTree::Mul(a, b) => normalize(ctx, a)?.mul(&normalize(ctx, b)?),
        ExprTree::Pow(t, e) => {
            if *e < 0 {
                return Err(Error::NegativeExponent(*e));
            }
            Ok(normalize(ctx, t)?.pow(*e as u32))
        }
    }
}
