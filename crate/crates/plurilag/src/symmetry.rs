//! Variational-symmetry certificates, divergence tests, witness search and
//! Noether fluxes.

use crate::calculus::{
    divergence, euler_operator, prolong_apply, total_derivative, total_derivative_multi,
    EvolutionaryField,
};
use crate::context::{Context, JetVar, MultiIndex};
use crate::error::{Error, Result};
use crate::expr::{Atom, Expr, Monomial};
use crate::linsolve;
use crate::reduction::EquationSystem;
use num_rational::BigRational;
use num_traits::Zero;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

/// The outcome of a variational-symmetry check.
///
/// `residual` is D_phi L - Div M in canonical form; the certificate is exact
/// when it vanishes identically and on-shell when it reduces to zero modulo
/// the supplied equation system.
#[derive(Debug, Clone)]
pub struct SymmetryCertificate {
    pub field: EvolutionaryField,
    pub lagrangian: Expr,
    pub witnesses: Vec<Expr>,
    pub residual: Expr,
    /// The residual reduced modulo the declared system, when one was given.
    pub reduced_residual: Option<Expr>,
}

impl SymmetryCertificate {
    /// True when the residual vanishes identically.
    pub fn is_exact(&self) -> bool {
        self.residual.is_zero()
    }

    /// True when the residual reduces to zero modulo the declared system;
    /// `None` when no system was supplied.
    pub fn is_on_shell(&self) -> Option<bool> {
        self.reduced_residual.as_ref().map(|r| r.is_zero())
    }
}

/// Checks whether the field is a variational symmetry of the Lagrangian with
/// the given divergence witnesses, optionally also reducing the residual
/// modulo an equation system.
pub fn check_variational_symmetry(
    lagrangian: &Expr,
    field: &EvolutionaryField,
    witnesses: &[Expr],
    system: Option<&EquationSystem>,
) -> Result<SymmetryCertificate> {
    let ctx = lagrangian.context().clone();
    if witnesses.len() != ctx.indep_count() {
        return Err(Error::ArityMismatch {
            expected: ctx.indep_count(),
            got: witnesses.len(),
        });
    }
    let action = prolong_apply(field, lagrangian)?;
    let residual = action.sub(&divergence(witnesses)?)?;
    let reduced_residual = match system {
        Some(sys) => Some(sys.reduce(&residual)?),
        None => None,
    };
    Ok(SymmetryCertificate {
        field: field.clone(),
        lagrangian: lagrangian.clone(),
        witnesses: witnesses.to_vec(),
        residual,
        reduced_residual,
    })
}

/// True when every Euler image of `f` vanishes, i.e. when `f` is a complete
/// divergence. (Constants also pass this test even though autonomous
/// divergences cannot produce them; the witness search reports those
/// honestly as ansatz failures.)
pub fn is_total_divergence(f: &Expr) -> Result<bool> {
    for dep in 0..f.context().dep_count() {
        if !euler_operator(f, dep)?.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Monomial bounds for the divergence-witness search.
#[derive(Debug, Clone, Copy)]
pub struct WitnessAnsatz {
    /// Maximal total order of any jet variable in a witness.
    pub max_order: u32,
    /// Maximal jet degree of a witness monomial.
    pub max_degree: u32,
    /// Allow one factor of sin or cos of a dependent variable.
    pub allow_trig: bool,
}

/// Grading class of a monomial: the total derivative maps a monomial of
/// class (w, d, t) into classes (w+1, d, t) and, through the trig chain,
/// (w+1, d+1, flipped t). Used to prune the ansatz without losing solutions:
/// dropping basis monomials none of whose image classes can meet the target
/// splits off a null-divergence component of any full solution.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Grading {
    weight: u32,
    jet_degree: u32,
    trig: Vec<(usize, bool, u32)>,
}

fn grading_of(m: &Monomial) -> Grading {
    let mut weight = 0;
    let mut jet_degree = 0;
    let mut trig: Vec<(usize, bool, u32)> = Vec::new();
    for (atom, power) in m.factors() {
        match atom {
            Atom::Jet(v) => {
                weight += v.order() * power;
                jet_degree += power;
            }
            Atom::Sin(d) => trig.push((*d, true, *power)),
            Atom::Cos(d) => trig.push((*d, false, *power)),
        }
    }
    trig.sort();
    Grading {
        weight,
        jet_degree,
        trig,
    }
}

fn flip_trig(trig: &[(usize, bool, u32)]) -> Vec<(usize, bool, u32)> {
    let mut out: Vec<(usize, bool, u32)> =
        trig.iter().map(|(d, s, p)| (*d, !*s, *p)).collect();
    out.sort();
    out
}

/// Enumerates all multi-indices of order at most `max` in `dim` variables.
fn multi_indices_up_to(dim: usize, max: u32) -> Vec<MultiIndex> {
    fn rec(dim: usize, max: u32, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if prefix.len() == dim {
            out.push(MultiIndex::new(prefix.clone()));
            return;
        }
        let used: u32 = prefix.iter().sum();
        for c in 0..=(max - used) {
            prefix.push(c);
            rec(dim, max, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, max, &mut Vec::new(), &mut out);
    out.sort();
    out
}

/// Enumerates the ansatz basis: power products of jet variables within the
/// order/degree bounds, optionally times one sin or cos factor.
fn ansatz_basis(ctx: &Arc<Context>, ansatz: &WitnessAnsatz) -> Vec<Vec<(Atom, u32)>> {
    let mut vars: Vec<JetVar> = Vec::new();
    for dep in 0..ctx.dep_count() {
        for idx in multi_indices_up_to(ctx.indep_count(), ansatz.max_order) {
            vars.push(JetVar::new(dep, idx));
        }
    }
    vars.sort();

    // multisets of jet variables with total degree <= max_degree
    let mut jet_parts: Vec<Vec<(Atom, u32)>> = Vec::new();
    fn rec(
        vars: &[JetVar],
        start: usize,
        remaining: u32,
        current: &mut Vec<(Atom, u32)>,
        out: &mut Vec<Vec<(Atom, u32)>>,
    ) {
        out.push(current.clone());
        if remaining == 0 {
            return;
        }
        for i in start..vars.len() {
            for power in 1..=remaining {
                current.push((Atom::Jet(vars[i].clone()), power));
                rec(vars, i + 1, remaining - power, current, out);
                current.pop();
            }
        }
    }
    rec(
        &vars,
        0,
        ansatz.max_degree,
        &mut Vec::new(),
        &mut jet_parts,
    );

    let mut out: Vec<Vec<(Atom, u32)>> = Vec::new();
    for jets in &jet_parts {
        // plain monomial (skip the empty one: constants have zero divergence)
        if !jets.is_empty() {
            out.push(jets.clone());
        }
        if ansatz.allow_trig {
            for dep in 0..ctx.dep_count() {
                for trig in [Atom::Sin(dep), Atom::Cos(dep)] {
                    let mut factors = jets.clone();
                    let pos = factors
                        .binary_search_by(|(a, _)| a.cmp(&trig))
                        .unwrap_err();
                    factors.insert(pos, (trig, 1));
                    out.push(factors);
                }
            }
        }
    }
    out
}

/// Searches for witnesses M_1..M_p with Div M = f by undetermined
/// coefficients over the ansatz basis, solved exactly.
///
/// Fails fast with [`Error::NotADivergence`] when some Euler image of `f` is
/// nonzero, and with [`Error::AnsatzExhausted`] when the linear system has no
/// solution within the bounds.
pub fn find_divergence_witnesses(f: &Expr, ansatz: &WitnessAnsatz) -> Result<Vec<Expr>> {
    let ctx = f.context().clone();
    let dim = ctx.indep_count();

    let mut obstructions = Vec::new();
    let mut all_zero = true;
    for dep in 0..ctx.dep_count() {
        let image = euler_operator(f, dep)?;
        if !image.is_zero() {
            all_zero = false;
        }
        obstructions.push(image);
    }
    if !all_zero {
        return Err(Error::NotADivergence { obstructions });
    }
    if f.is_zero() {
        return Ok(vec![Expr::zero(&ctx); dim]);
    }

    // Target classes and their closure under the trig chain, in both
    // directions: a trig-bearing witness monomial admissible through one of
    // its two image classes contributes to the sibling class as well, so the
    // sibling must be tracked for the pruning to preserve every solution.
    let mut closure: BTreeSet<Grading> = f.terms().iter().map(grading_of).collect();
    let degree_cap = ansatz.max_degree + 1;
    loop {
        let mut added = false;
        let snapshot: Vec<Grading> = closure.iter().cloned().collect();
        for g in snapshot {
            if g.trig.is_empty() {
                continue;
            }
            let mut siblings = Vec::new();
            if g.jet_degree < degree_cap {
                siblings.push(Grading {
                    weight: g.weight,
                    jet_degree: g.jet_degree + 1,
                    trig: flip_trig(&g.trig),
                });
            }
            if g.jet_degree > 0 {
                siblings.push(Grading {
                    weight: g.weight,
                    jet_degree: g.jet_degree - 1,
                    trig: flip_trig(&g.trig),
                });
            }
            for s in siblings {
                if closure.insert(s) {
                    added = true;
                }
            }
        }
        if !added {
            break;
        }
    }

    // admissible basis monomials: some image class lies in the closure
    let mut basis: Vec<Expr> = Vec::new();
    for factors in ansatz_basis(&ctx, ansatz) {
        let probe = {
            let mut acc = Expr::zero(&ctx);
            for (atom, power) in &factors {
                let one = match atom {
                    Atom::Jet(v) => Expr::jet(&ctx, v.clone())?,
                    Atom::Sin(d) => Expr::sin(&ctx, *d)?,
                    Atom::Cos(d) => Expr::cos(&ctx, *d)?,
                };
                acc = if acc.is_zero() {
                    one.pow(*power)
                } else {
                    acc.mul(&one.pow(*power))?
                };
            }
            acc
        };
        let Some(m) = probe.terms().first() else {
            continue;
        };
        let g = grading_of(m);
        let direct = Grading {
            weight: g.weight + 1,
            jet_degree: g.jet_degree,
            trig: g.trig.clone(),
        };
        let chained = Grading {
            weight: g.weight + 1,
            jet_degree: g.jet_degree + 1,
            trig: flip_trig(&g.trig),
        };
        let admissible = closure.contains(&direct)
            || (!g.trig.is_empty() && closure.contains(&chained));
        if admissible {
            basis.push(probe);
        }
    }

    let fail = || Error::AnsatzExhausted {
        order: ansatz.max_order,
        degree: ansatz.max_degree,
        trig: ansatz.allow_trig,
    };
    if basis.is_empty() {
        return Err(fail());
    }

    // columns: (slot, basis monomial); rows: monomial keys of the images
    let mut row_index: BTreeMap<Vec<(Atom, u32)>, usize> = BTreeMap::new();
    let mut columns: Vec<Vec<(usize, BigRational)>> = Vec::new();
    let mut images: Vec<(usize, usize, Expr)> = Vec::new();
    for slot in 0..dim {
        for (b, mono) in basis.iter().enumerate() {
            let image = total_derivative(mono, slot)?;
            images.push((slot, b, image));
        }
    }
    for m in f.terms() {
        let next = row_index.len();
        row_index.entry(m.factors().to_vec()).or_insert(next);
    }
    for (_, _, image) in &images {
        let mut column = Vec::new();
        for m in image.terms() {
            let next = row_index.len();
            let row = *row_index.entry(m.factors().to_vec()).or_insert(next);
            column.push((row, m.coeff().clone()));
        }
        columns.push(column);
    }

    let rows = row_index.len();
    let cols = columns.len();
    let mut matrix = vec![vec![BigRational::zero(); cols]; rows];
    for (c, column) in columns.iter().enumerate() {
        for (r, coeff) in column {
            matrix[*r][c] = coeff.clone();
        }
    }
    let mut rhs = vec![BigRational::zero(); rows];
    for m in f.terms() {
        let row = row_index[&m.factors().to_vec()];
        rhs[row] = m.coeff().clone();
    }

    let solution = linsolve::solve(&matrix, &rhs, cols).ok_or_else(fail)?;

    let mut witnesses = vec![Expr::zero(&ctx); dim];
    for ((slot, b, _), coeff) in images.iter().zip(&solution) {
        if coeff.is_zero() {
            continue;
        }
        witnesses[*slot] = witnesses[*slot].add(&basis[*b].scale(coeff))?;
    }

    // the returned witnesses must verify exactly
    let check = divergence(&witnesses)?.sub(f)?;
    if !check.is_zero() {
        return Err(Error::Internal(format!(
            "witness search produced a non-verifying tuple; defect: {check}"
        )));
    }
    Ok(witnesses)
}

/// Noether fluxes of an exact variational symmetry: returns F with
/// Div F = sum over dependent variables of phi^alpha * (delta L / delta
/// u^alpha), verified exactly before returning.
///
/// The fluxes are obtained from the witnesses by integrating the prolonged
/// action by parts: for first-order Lagrangians F_i = M_i - phi dL/du_i, and
/// each higher-order jet variable contributes its chain of boundary terms.
pub fn conservation_law(
    lagrangian: &Expr,
    field: &EvolutionaryField,
    witnesses: &[Expr],
) -> Result<Vec<Expr>> {
    let ctx = lagrangian.context().clone();
    let certificate = check_variational_symmetry(lagrangian, field, witnesses, None)?;
    if !certificate.is_exact() {
        return Err(Error::NotASymmetry {
            residual: certificate.residual,
        });
    }

    // boundary terms R_i of the integration by parts, so that
    // D_phi L = sum_alpha phi^alpha delta L/delta u^alpha + Div R
    let mut boundary = vec![Expr::zero(&ctx); ctx.indep_count()];
    for var in lagrangian.dependent_vars() {
        let phi = field.characteristic(var.dep);
        let mut idx = var.idx.clone();
        let mut q = lagrangian.partial(&var);
        while idx.order() > 0 {
            let dir = (0..idx.len())
                .find(|&j| idx.get(j) > 0)
                .expect("positive order has a nonzero entry");
            let lowered = idx
                .checked_sub(&MultiIndex::unit(idx.len(), dir))
                .expect("entry is positive");
            let prolonged = total_derivative_multi(phi, &lowered)?;
            boundary[dir] = boundary[dir].add(&prolonged.mul(&q)?)?;
            q = total_derivative(&q, dir)?.neg();
            idx = lowered;
        }
    }

    let mut fluxes = Vec::with_capacity(witnesses.len());
    for (m, r) in witnesses.iter().zip(&boundary) {
        fluxes.push(m.sub(r)?);
    }

    // mandatory verification of the Noether identity
    let mut rhs = Expr::zero(&ctx);
    for dep in 0..ctx.dep_count() {
        let image = euler_operator(lagrangian, dep)?;
        rhs = rhs.add(&field.characteristic(dep).mul(&image)?)?;
    }
    let defect = divergence(&fluxes)?.sub(&rhs)?;
    if !defect.is_zero() {
        return Err(Error::Internal(format!(
            "Noether identity verification failed; defect: {defect}"
        )));
    }
    Ok(fluxes)
}
