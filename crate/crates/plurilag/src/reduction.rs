//! Differential equations as oriented rewrite systems.
//!
//! A [`Rule`] orients an equation u^alpha_J = rhs; an [`EquationSystem`]
//! bundles rules with a priority order (declaration order by default).
//! Reduction replaces any jet variable u^alpha_I with I >= J componentwise by
//! D_{I-J}(rhs), generating differential consequences on demand, and repeats
//! until no reducible variable remains. This realizes "on solutions of the
//! system" as a normal-form computation.

use crate::calculus::total_derivative_multi;
use crate::context::{Context, JetVar};
use crate::error::{Error, Result};
use crate::expr::{Atom, Expr};
use std::collections::{HashMap, HashSet};
use std::sync::Arc;

/// Default rewrite budget; reduction aborts with an error beyond this.
/// Compatibility of user-supplied systems is sampled, not proven, so the
/// budget is the hard termination guard.
pub const DEFAULT_STEP_BUDGET: u64 = 1_000_000;

/// One oriented rewrite rule u^alpha_J -> rhs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    lead: JetVar,
    rhs: Expr,
}

impl Rule {
    /// Builds a rule, rejecting right-hand sides that contain the lead or
    /// any derivative of it (those could rewrite forever into themselves).
    pub fn new(lead: JetVar, rhs: Expr) -> Result<Rule> {
        let ctx = rhs.context();
        ctx.check_dep(lead.dep)?;
        if lead.idx.len() != ctx.indep_count() {
            return Err(Error::ContextMismatch);
        }
        for var in rhs.dependent_vars() {
            if var.dep == lead.dep && var.idx.dominates(&lead.idx) {
                return Err(Error::SelfReferentialRule(lead.render(ctx)));
            }
        }
        Ok(Rule { lead, rhs })
    }

    pub fn lead(&self) -> &JetVar {
        &self.lead
    }

    pub fn rhs(&self) -> &Expr {
        &self.rhs
    }

    /// True when this rule applies to the given jet variable.
    fn applies_to(&self, var: &JetVar) -> bool {
        var.dep == self.lead.dep && var.idx.dominates(&self.lead.idx)
    }
}

/// A prioritized list of rewrite rules over one context.
#[derive(Debug, Clone)]
pub struct EquationSystem {
    ctx: Arc<Context>,
    rules: Vec<Rule>,
    step_budget: u64,
}

impl EquationSystem {
    /// Builds a system; rule priority is declaration order, highest first.
    pub fn new(ctx: &Arc<Context>, rules: Vec<Rule>) -> Result<EquationSystem> {
        for rule in &rules {
            if rule.rhs.context() != ctx {
                return Err(Error::ContextMismatch);
            }
        }
        Ok(EquationSystem {
            ctx: ctx.clone(),
            rules,
            step_budget: DEFAULT_STEP_BUDGET,
        })
    }

    pub fn with_step_budget(mut self, budget: u64) -> EquationSystem {
        self.step_budget = budget;
        self
    }

    pub fn context(&self) -> &Arc<Context> {
        &self.ctx
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    /// The highest-priority rule applicable to a jet variable, if any.
    fn rule_for(&self, var: &JetVar, priority: &[usize]) -> Option<&Rule> {
        priority
            .iter()
            .map(|&i| &self.rules[i])
            .find(|r| r.applies_to(var))
    }

    /// First reducible jet variable of `f` in canonical scan order (terms in
    /// canonical order, factors left to right).
    fn first_reducible(&self, f: &Expr, priority: &[usize]) -> Option<JetVar> {
        for m in f.terms() {
            for (atom, _) in m.factors() {
                if let Atom::Jet(v) = atom {
                    if self.rule_for(v, priority).is_some() {
                        return Some(v.clone());
                    }
                }
            }
        }
        None
    }

    fn reduce_with_priority(&self, f: &Expr, priority: &[usize], cache: &mut NfCache) -> Result<Expr> {
        if f.context() != &self.ctx {
            return Err(Error::ContextMismatch);
        }
        let mut current = f.clone();
        while let Some(var) = self.first_reducible(&current, priority) {
            let nf = self.variable_normal_form(&var, priority, cache)?;
            current = current.substitute_jet(&var, &nf)?;
        }
        Ok(current)
    }

    /// Normal form of one reducible jet variable, memoized. Every left-hand
    /// side is a single variable, so the rewrite system has no critical
    /// pairs and any substitution order reaches the same normal form;
    /// computing it once per variable only changes the cost.
    fn variable_normal_form(
        &self,
        var: &JetVar,
        priority: &[usize],
        cache: &mut NfCache,
    ) -> Result<Expr> {
        if let Some(nf) = cache.done.get(var) {
            return Ok(nf.clone());
        }
        if cache.steps >= self.step_budget {
            return Err(Error::ReductionDivergence {
                budget: self.step_budget,
            });
        }
        cache.steps += 1;
        if !cache.in_progress.insert(var.clone()) {
            // the variable's contractum eventually rewrites back to itself
            return Err(Error::ReductionDivergence {
                budget: self.step_budget,
            });
        }
        let rule = self
            .rule_for(var, priority)
            .expect("caller checked reducibility");
        let shift = var
            .idx
            .checked_sub(&rule.lead.idx)
            .expect("rule applicability implies dominance");
        let contractum = total_derivative_multi(&rule.rhs, &shift)?;
        let nf = self.reduce_with_priority(&contractum, priority, cache)?;
        cache.in_progress.remove(var);
        cache.done.insert(var.clone(), nf.clone());
        Ok(nf)
    }

    /// Normal form of `f` modulo the system: every reducible jet variable is
    /// replaced by the derived right-hand side, recursively, until none
    /// remains.
    pub fn reduce(&self, f: &Expr) -> Result<Expr> {
        let priority: Vec<usize> = (0..self.rules.len()).collect();
        self.reduce_with_priority(f, &priority, &mut NfCache::default())
    }

    /// True when `f` reduces to zero, i.e. when f = 0 is a differential
    /// consequence of the system.
    pub fn is_consequence(&self, f: &Expr) -> Result<bool> {
        Ok(self.reduce(f)?.is_zero())
    }

    /// Reduces each sample under every priority permutation of the rules and
    /// reports whether the normal forms agree. The cost grows with the
    /// factorial of the rule count; intended for desk-scale systems.
    pub fn check_confluence_samples(&self, samples: &[Expr]) -> Result<ConfluenceReport> {
        let orders = permutations(self.rules.len());
        let mut caches: Vec<NfCache> = orders.iter().map(|_| NfCache::default()).collect();
        let mut entries = Vec::with_capacity(samples.len());
        for sample in samples {
            let mut normal_forms: Vec<Expr> = Vec::new();
            for (order, cache) in orders.iter().zip(&mut caches) {
                let nf = self.reduce_with_priority(sample, order, cache)?;
                if !normal_forms.contains(&nf) {
                    normal_forms.push(nf);
                }
            }
            let agrees = normal_forms.len() <= 1;
            entries.push(ConfluenceEntry {
                sample: sample.clone(),
                normal_forms,
                agrees,
            });
        }
        Ok(ConfluenceReport { entries })
    }
}

/// Memoized per-variable normal forms of one reduction run under one
/// priority order.
#[derive(Default)]
struct NfCache {
    done: HashMap<JetVar, Expr>,
    in_progress: HashSet<JetVar>,
    steps: u64,
}

/// Outcome of a sampled confluence check.
#[derive(Debug, Clone)]
pub struct ConfluenceReport {
    pub entries: Vec<ConfluenceEntry>,
}

impl ConfluenceReport {
    pub fn all_agree(&self) -> bool {
        self.entries.iter().all(|e| e.agrees)
    }
}

/// Distinct normal forms of one sample across rule-priority permutations.
#[derive(Debug, Clone)]
pub struct ConfluenceEntry {
    pub sample: Expr,
    pub normal_forms: Vec<Expr>,
    pub agrees: bool,
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    let mut items: Vec<usize> = (0..n).collect();
    heap_permute(&mut items, n, &mut out);
    out
}

fn heap_permute(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == 1 {
        out.push(items.clone());
        return;
    }
    for i in 0..k {
        heap_permute(items, k - 1, out);
        if k.is_multiple_of(2) {
            items.swap(i, k - 1);
        } else {
            items.swap(0, k - 1);
        }
    }
}
