//! Seeded random-expression generator shared by the integration suites.

use num_bigint::BigInt;
use num_rational::BigRational;
use plurilag::{Context, Expr, JetVar, MultiIndex};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::sync::Arc;

pub struct ExprGen {
    pub rng: StdRng,
}

#[allow(dead_code)]
impl ExprGen {
    pub fn new(seed: u64) -> ExprGen {
        ExprGen {
            rng: StdRng::seed_from_u64(seed),
        }
    }

    pub fn rational(&mut self) -> BigRational {
        let num = self.rng.gen_range(-6i64..=6);
        let den = self.rng.gen_range(1i64..=4);
        BigRational::new(BigInt::from(if num == 0 { 1 } else { num }), BigInt::from(den))
    }

    pub fn multi_index(&mut self, dim: usize, max_order: u32) -> MultiIndex {
        let order = self.rng.gen_range(0..=max_order);
        let mut counts = vec![0u32; dim];
        for _ in 0..order {
            let j = self.rng.gen_range(0..dim);
            counts[j] += 1;
        }
        MultiIndex::new(counts)
    }

    /// A random canonical expression: a short sum of monomials in jet
    /// variables of bounded order and degree, each optionally carrying one
    /// sin or cos factor.
    pub fn expr(
        &mut self,
        ctx: &Arc<Context>,
        max_order: u32,
        max_degree: u32,
        max_terms: usize,
        trig: bool,
    ) -> Expr {
        let dim = ctx.indep_count();
        let deps = ctx.dep_count();
        let terms = self.rng.gen_range(1..=max_terms);
        let mut out = Expr::zero(ctx);
        for _ in 0..terms {
            let mut mono = Expr::constant(ctx, self.rational());
            let degree = self.rng.gen_range(0..=max_degree);
            for _ in 0..degree {
                let dep = self.rng.gen_range(0..deps);
                let var = JetVar::new(dep, self.multi_index(dim, max_order));
                mono = mono.mul(&Expr::jet(ctx, var).unwrap()).unwrap();
            }
            if trig && self.rng.gen_bool(0.4) {
                let dep = self.rng.gen_range(0..deps);
                let factor = if self.rng.gen_bool(0.5) {
                    Expr::sin(ctx, dep).unwrap()
                } else {
                    Expr::cos(ctx, dep).unwrap()
                };
                mono = mono.mul(&factor).unwrap();
            }
            out = out.add(&mono).unwrap();
        }
        out
    }
}
