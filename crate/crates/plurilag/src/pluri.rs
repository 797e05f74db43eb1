//! Lagrangian k-forms on multi-time, closedness residuals and the
//! Euler-Lagrange system of second-order 2-forms.

use crate::calculus::{
    restricted_delta_u, restricted_delta_u_k, restricted_delta_u_km, total_derivative,
};
use crate::context::Context;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::reduction::EquationSystem;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// A k-form on m-dimensional multi-time whose coefficients are differential
/// functions. Coefficients are stored at strictly increasing index tuples;
/// evaluation at a permuted tuple picks up the sign of the permutation, and
/// tuples with a repeated index evaluate to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianForm {
    ctx: Arc<Context>,
    degree: usize,
    coeffs: BTreeMap<Vec<usize>, Expr>,
}

impl LagrangianForm {
    /// An empty (zero) form of the given degree.
    pub fn new(ctx: &Arc<Context>, degree: usize) -> Result<LagrangianForm> {
        if degree > ctx.indep_count() {
            return Err(Error::DegreeOverflow {
                degree,
                dim: ctx.indep_count(),
            });
        }
        Ok(LagrangianForm {
            ctx: ctx.clone(),
            degree,
            coeffs: BTreeMap::new(),
        })
    }

    pub fn context(&self) -> &Arc<Context> {
        &self.ctx
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Dimension of the underlying multi-time.
    pub fn dimension(&self) -> usize {
        self.ctx.indep_count()
    }

    /// Stored (increasing tuple, coefficient) pairs, zero coefficients
    /// omitted.
    pub fn coefficients(&self) -> impl Iterator<Item = (&[usize], &Expr)> {
        self.coeffs.iter().map(|(t, e)| (t.as_slice(), e))
    }

    fn check_tuple(&self, tuple: &[usize]) -> Result<()> {
        if tuple.len() != self.degree {
            return Err(Error::BadTuple(tuple.to_vec()));
        }
        for &i in tuple {
            if i >= self.ctx.indep_count() {
                return Err(Error::BadTuple(tuple.to_vec()));
            }
        }
        Ok(())
    }

    /// Sorts a tuple, returning the permutation sign; `None` for repeated
    /// indices.
    fn sort_tuple(tuple: &[usize]) -> Option<(Vec<usize>, i8)> {
        let mut sorted = tuple.to_vec();
        let mut sign = 1i8;
        // insertion sort, counting transpositions
        for i in 1..sorted.len() {
            let mut j = i;
            while j > 0 && sorted[j - 1] > sorted[j] {
                sorted.swap(j - 1, j);
                sign = -sign;
                j -= 1;
            }
        }
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return None;
        }
        Some((sorted, sign))
    }

    /// Sets the coefficient at the given tuple (any index order; the stored
    /// value is sign-adjusted to the increasing arrangement). A tuple with a
    /// repeated index only accepts the zero expression.
    pub fn set_coefficient(&mut self, tuple: &[usize], expr: Expr) -> Result<()> {
        self.check_tuple(tuple)?;
        if expr.context() != &self.ctx {
            return Err(Error::ContextMismatch);
        }
        let Some((sorted, sign)) = Self::sort_tuple(tuple) else {
            if expr.is_zero() {
                return Ok(());
            }
            return Err(Error::BadTuple(tuple.to_vec()));
        };
        let value = if sign < 0 { expr.neg() } else { expr };
        if value.is_zero() {
            self.coeffs.remove(&sorted);
        } else {
            self.coeffs.insert(sorted, value);
        }
        Ok(())
    }

    /// The coefficient at an arbitrary tuple: antisymmetric in the indices,
    /// zero at repeated indices and at absent tuples.
    pub fn coefficient(&self, tuple: &[usize]) -> Result<Expr> {
        self.check_tuple(tuple)?;
        let Some((sorted, sign)) = Self::sort_tuple(tuple) else {
            return Ok(Expr::zero(&self.ctx));
        };
        match self.coeffs.get(&sorted) {
            None => Ok(Expr::zero(&self.ctx)),
            Some(e) => Ok(if sign < 0 { e.neg() } else { e.clone() }),
        }
    }

    /// The exterior derivative: the coefficient of d at an increasing
    /// (k+1)-tuple is the alternating sum of total derivatives of the
    /// coefficients at the tuples with one index removed.
    pub fn exterior_derivative(&self) -> Result<LagrangianForm> {
        let dim = self.ctx.indep_count();
        if self.degree >= dim {
            return Err(Error::DegreeOverflow {
                degree: self.degree,
                dim,
            });
        }
        let mut out = LagrangianForm::new(&self.ctx, self.degree + 1)?;
        for tuple in increasing_tuples(dim, self.degree + 1) {
            let mut acc = Expr::zero(&self.ctx);
            for (r, &dir) in tuple.iter().enumerate() {
                let mut rest = tuple.clone();
                rest.remove(r);
                let term = total_derivative(&self.coefficient(&rest)?, dir)?;
                acc = if r % 2 == 0 {
                    acc.add(&term)?
                } else {
                    acc.sub(&term)?
                };
            }
            out.set_coefficient(&tuple, acc)?;
        }
        Ok(out)
    }

    /// Closedness residuals modulo an equation system: for every coefficient
    /// slot of the exterior derivative, the raw expression and its reduction.
    /// The form is closed on solutions exactly when every reduced entry is
    /// zero.
    pub fn closure_residual(&self, system: &EquationSystem) -> Result<ClosureReport> {
        let derivative = self.exterior_derivative()?;
        let mut entries = Vec::new();
        for tuple in increasing_tuples(self.ctx.indep_count(), self.degree + 1) {
            let raw = derivative.coefficient(&tuple)?;
            let reduced = system.reduce(&raw)?;
            entries.push(ClosureEntry {
                tuple,
                raw,
                reduced,
            });
        }
        Ok(ClosureReport { entries })
    }

    /// Generates the multi-time Euler-Lagrange system of a second-order
    /// 2-form; see [`multi_time_el`].
    pub fn multi_time_el(&self) -> Result<MultiTimeElSystem> {
        multi_time_el(self)
    }
}

/// All strictly increasing k-tuples from 0..dim.
fn increasing_tuples(dim: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(dim: usize, k: usize, start: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == k {
            out.push(prefix.clone());
            return;
        }
        for i in start..dim {
            prefix.push(i);
            rec(dim, k, i + 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, k, 0, &mut Vec::new(), &mut out);
    out
}

/// One coefficient slot of a closedness check.
#[derive(Debug, Clone)]
pub struct ClosureEntry {
    pub tuple: Vec<usize>,
    pub raw: Expr,
    pub reduced: Expr,
}

/// Result of [`LagrangianForm::closure_residual`].
#[derive(Debug, Clone)]
pub struct ClosureReport {
    pub entries: Vec<ClosureEntry>,
}

impl ClosureReport {
    /// True when every reduced coefficient vanishes.
    pub fn closed_on_solutions(&self) -> bool {
        self.entries.iter().all(|e| e.reduced.is_zero())
    }
}

/// Provenance of one generated Euler-Lagrange equation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ElEquationKind {
    /// Full plane variational derivative of L_ij in its own plane.
    PlaneEuler { dep: usize, i: usize, j: usize },
    /// First-order derivative by a direction outside the plane.
    OutsideFirst {
        dep: usize,
        i: usize,
        j: usize,
        k: usize,
    },
    /// Plain second-order partial by two directions outside the plane.
    OutsideSecond {
        dep: usize,
        i: usize,
        j: usize,
        k: usize,
        m: usize,
    },
    /// Matching of the momentum p_i computed through two different planes:
    /// delta L_ij / delta u_j minus delta L_ij' / delta u_j'.
    MomentumMatch {
        dep: usize,
        i: usize,
        j: usize,
        jp: usize,
    },
    /// Matching of the mixed momentum p_i^k through two different planes:
    /// dL_ij/du_jk minus dL_ij'/du_j'k.
    MixedMomentumMatch {
        dep: usize,
        i: usize,
        k: usize,
        j: usize,
        jp: usize,
    },
    /// Cyclic trace over a triple of directions:
    /// dL_ij/du_ij + dL_jk/du_jk + dL_ki/du_ki.
    TripleTrace {
        dep: usize,
        i: usize,
        j: usize,
        k: usize,
    },
}

impl ElEquationKind {
    /// Human-readable label with variable names from the context.
    pub fn render(&self, ctx: &Context) -> String {
        let n = |i: &usize| ctx.indep_name(*i).to_owned();
        let d = |a: &usize| ctx.dep_name(*a).to_owned();
        match self {
            ElEquationKind::PlaneEuler { dep, i, j } => {
                format!("plane-euler[{}]({},{})", d(dep), n(i), n(j))
            }
            ElEquationKind::OutsideFirst { dep, i, j, k } => {
                format!("outside-first[{}]({},{};{})", d(dep), n(i), n(j), n(k))
            }
            ElEquationKind::OutsideSecond { dep, i, j, k, m } => {
                format!(
                    "outside-second[{}]({},{};{}{})",
                    d(dep),
                    n(i),
                    n(j),
                    n(k),
                    n(m)
                )
            }
            ElEquationKind::MomentumMatch { dep, i, j, jp } => {
                format!("momentum-match[{}]({};{},{})", d(dep), n(i), n(j), n(jp))
            }
            ElEquationKind::MixedMomentumMatch { dep, i, k, j, jp } => {
                format!(
                    "mixed-momentum-match[{}]({},{};{},{})",
                    d(dep),
                    n(i),
                    n(k),
                    n(j),
                    n(jp)
                )
            }
            ElEquationKind::TripleTrace { dep, i, j, k } => {
                format!("triple-trace[{}]({},{},{})", d(dep), n(i), n(j), n(k))
            }
        }
    }
}

/// One generated equation: provenance tag plus canonical left-hand side
/// (the equation is `expr = 0`). Identically-zero equations are kept and
/// flagged trivial.
#[derive(Debug, Clone)]
pub struct ElEquation {
    pub kind: ElEquationKind,
    pub expr: Expr,
}

impl ElEquation {
    pub fn is_trivial(&self) -> bool {
        self.expr.is_zero()
    }
}

/// The generated multi-time Euler-Lagrange system.
#[derive(Debug, Clone)]
pub struct MultiTimeElSystem {
    ctx: Arc<Context>,
    pub equations: Vec<ElEquation>,
}

impl MultiTimeElSystem {
    pub fn context(&self) -> &Arc<Context> {
        &self.ctx
    }

    pub fn len(&self) -> usize {
        self.equations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.equations.is_empty()
    }

    /// The equations that are not identically zero.
    pub fn nontrivial(&self) -> Vec<&ElEquation> {
        self.equations.iter().filter(|e| !e.is_trivial()).collect()
    }
}

/// Generates the multi-time Euler-Lagrange system of a second-order 2-form.
///
/// For each dependent variable the enumeration is, with (i, j) running over
/// increasing plane pairs and L_ij read antisymmetrically:
///
/// 1. the plane variational derivative of L_ij for every pair (i, j);
/// 2. dL_ij/du_k (first-order restricted) for every k outside the plane;
/// 3. dL_ij/du_km (plain partial) for every pair k <= m outside the plane;
/// 4. for every direction i, the pairwise differences of the momentum
///    dL_ij/du_j over admissible planes j (the momentum may not depend on
///    the plane partner);
/// 5. for every direction i and every k != i, the pairwise differences of
///    dL_ij/du_jk over admissible planes j;
/// 6. for every increasing triple i < j < k, the cyclic trace
///    dL_ij/du_ij + dL_jk/du_jk + dL_ki/du_ki.
///
/// On 3-dimensional multi-time with one dependent variable this yields
/// 3 + 3 + 3 + 3 + 6 + 1 = 19 equations.
pub fn multi_time_el(form: &LagrangianForm) -> Result<MultiTimeElSystem> {
    if form.degree() != 2 {
        return Err(Error::UnsupportedFormDegree(form.degree()));
    }
    let ctx = form.context().clone();
    for (tuple, expr) in form.coefficients() {
        let found = expr.max_order().total;
        if found > 2 {
            let _ = tuple;
            return Err(Error::OrderOverflow { found, max: 2 });
        }
    }
    let dim = ctx.indep_count();
    let mut equations = Vec::new();

    for dep in 0..ctx.dep_count() {
        // 1-3: per increasing plane pair
        for pair in increasing_tuples(dim, 2) {
            let (i, j) = (pair[0], pair[1]);
            let lij = form.coefficient(&[i, j])?;
            equations.push(ElEquation {
                kind: ElEquationKind::PlaneEuler { dep, i, j },
                expr: restricted_delta_u(&lij, dep, i, j)?,
            });
        }
        for pair in increasing_tuples(dim, 2) {
            let (i, j) = (pair[0], pair[1]);
            let lij = form.coefficient(&[i, j])?;
            for k in 0..dim {
                if k == i || k == j {
                    continue;
                }
                equations.push(ElEquation {
                    kind: ElEquationKind::OutsideFirst { dep, i, j, k },
                    expr: restricted_delta_u_k(&lij, dep, k, i, j)?,
                });
            }
        }
        for pair in increasing_tuples(dim, 2) {
            let (i, j) = (pair[0], pair[1]);
            let lij = form.coefficient(&[i, j])?;
            for k in 0..dim {
                if k == i || k == j {
                    continue;
                }
                for m in k..dim {
                    if m == i || m == j {
                        continue;
                    }
                    equations.push(ElEquation {
                        kind: ElEquationKind::OutsideSecond { dep, i, j, k, m },
                        expr: restricted_delta_u_km(&lij, dep, k, m)?,
                    });
                }
            }
        }
        // 4: momentum matching across planes
        for i in 0..dim {
            let partners: Vec<usize> = (0..dim).filter(|&j| j != i).collect();
            for a in 0..partners.len() {
                for b in (a + 1)..partners.len() {
                    let (j, jp) = (partners[a], partners[b]);
                    let first = restricted_delta_u_k(
                        &form.coefficient(&[i, j])?,
                        dep,
                        j,
                        i,
                        j,
                    )?;
                    let second = restricted_delta_u_k(
                        &form.coefficient(&[i, jp])?,
                        dep,
                        jp,
                        i,
                        jp,
                    )?;
                    equations.push(ElEquation {
                        kind: ElEquationKind::MomentumMatch { dep, i, j, jp },
                        expr: first.sub(&second)?,
                    });
                }
            }
        }
        // 5: mixed momentum matching
        for i in 0..dim {
            let partners: Vec<usize> = (0..dim).filter(|&j| j != i).collect();
            for k in 0..dim {
                if k == i {
                    continue;
                }
                for a in 0..partners.len() {
                    for b in (a + 1)..partners.len() {
                        let (j, jp) = (partners[a], partners[b]);
                        let first = restricted_delta_u_km(
                            &form.coefficient(&[i, j])?,
                            dep,
                            j,
                            k,
                        )?;
                        let second = restricted_delta_u_km(
                            &form.coefficient(&[i, jp])?,
                            dep,
                            jp,
                            k,
                        )?;
                        equations.push(ElEquation {
                            kind: ElEquationKind::MixedMomentumMatch { dep, i, k, j, jp },
                            expr: first.sub(&second)?,
                        });
                    }
                }
            }
        }
        // 6: cyclic traces over triples
        for triple in increasing_tuples(dim, 3) {
            let (i, j, k) = (triple[0], triple[1], triple[2]);
            let mut acc = restricted_delta_u_km(&form.coefficient(&[i, j])?, dep, i, j)?;
            acc = acc.add(&restricted_delta_u_km(
                &form.coefficient(&[j, k])?,
                dep,
                j,
                k,
            )?)?;
            acc = acc.add(&restricted_delta_u_km(
                &form.coefficient(&[k, i])?,
                dep,
                k,
                i,
            )?)?;
            equations.push(ElEquation {
                kind: ElEquationKind::TripleTrace { dep, i, j, k },
                expr: acc,
            });
        }
    }

    Ok(MultiTimeElSystem { ctx, equations })
}

/// How one generated equation relates to a reference system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElEquationStatus {
    /// Identically zero.
    Trivial,
    /// Reduces to zero modulo the system.
    OnShell,
    /// Does not reduce to zero modulo the system.
    Independent,
}

impl fmt::Display for ElEquationStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ElEquationStatus::Trivial => "trivial",
            ElEquationStatus::OnShell => "on-shell",
            ElEquationStatus::Independent => "independent",
        };
        write!(f, "{s}")
    }
}

/// Classification of a generated system against a reference system.
#[derive(Debug, Clone)]
pub struct ElClassification {
    /// Status per equation, in generation order.
    pub statuses: Vec<ElEquationStatus>,
}

impl ElClassification {
    pub fn count(&self, status: ElEquationStatus) -> usize {
        self.statuses.iter().filter(|s| **s == status).count()
    }

    /// Indices of the equations that stay independent of the system.
    pub fn independent(&self) -> Vec<usize> {
        self.statuses
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == ElEquationStatus::Independent)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Partitions the generated equations into identically-zero, reducing to
/// zero modulo the system, and independent.
pub fn classify_el_system(
    system: &MultiTimeElSystem,
    reference: &EquationSystem,
) -> Result<ElClassification> {
    let mut statuses = Vec::with_capacity(system.equations.len());
    for eq in &system.equations {
        let status = if eq.is_trivial() {
            ElEquationStatus::Trivial
        } else if reference.reduce(&eq.expr)?.is_zero() {
            ElEquationStatus::OnShell
        } else {
            ElEquationStatus::Independent
        };
        statuses.push(status);
    }
    Ok(ElClassification { statuses })
}

/// Equality up to overall sign; generated equations are compared against
/// displayed ones modulo the orientation of the defining plane.
pub fn equal_up_to_sign(a: &Expr, b: &Expr) -> bool {
    a == b || *a == b.neg()
}

impl fmt::Display for LagrangianForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (tuple, expr) in &self.coeffs {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let names: Vec<&str> = tuple.iter().map(|&i| self.ctx.indep_name(i)).collect();
            write!(f, "({expr}) d{}", names.join("^d"))?;
        }
        Ok(())
    }
}
