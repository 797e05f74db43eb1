//! Total derivatives, evolutionary vector fields, divergences and
//! variational-derivative operators.

use crate::context::{Context, JetVar, MultiIndex};
use crate::error::{Error, Result};
use crate::expr::Expr;
use std::collections::HashMap;
use std::sync::Arc;

/// An evolutionary (vertical) generalized vector field, determined by one
/// characteristic expression per dependent variable. Its prolongation acts on
/// a jet variable u^alpha_I as the I-th total derivative of the alpha-th
/// characteristic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvolutionaryField {
    ctx: Arc<Context>,
    chars: Vec<Expr>,
}

impl EvolutionaryField {
    /// Builds a field from one characteristic per dependent variable.
    pub fn new(ctx: &Arc<Context>, chars: Vec<Expr>) -> Result<EvolutionaryField> {
        if chars.len() != ctx.dep_count() {
            return Err(Error::ArityMismatch {
                expected: ctx.dep_count(),
                got: chars.len(),
            });
        }
        for c in &chars {
            if c.context() != ctx {
                return Err(Error::ContextMismatch);
            }
        }
        Ok(EvolutionaryField {
            ctx: ctx.clone(),
            chars,
        })
    }

    /// The zero field.
    pub fn zero(ctx: &Arc<Context>) -> EvolutionaryField {
        EvolutionaryField {
            ctx: ctx.clone(),
            chars: vec![Expr::zero(ctx); ctx.dep_count()],
        }
    }

    pub fn context(&self) -> &Arc<Context> {
        &self.ctx
    }

    pub fn characteristics(&self) -> &[Expr] {
        &self.chars
    }

    pub fn characteristic(&self, dep: usize) -> &Expr {
        &self.chars[dep]
    }
}

/// Total derivative D_j: shifts every jet variable by e_j and chains through
/// the trig atoms. Expressions are autonomous, so there is no explicit
/// coordinate term.
pub fn total_derivative(f: &Expr, j: usize) -> Result<Expr> {
    f.context().check_indep(j)?;
    let ctx = f.context().clone();
    let mut out = Expr::zero(&ctx);
    for var in f.dependent_vars() {
        let shifted = Expr::jet(&ctx, JetVar::new(var.dep, var.idx.bump(j)))?;
        out = out.add(&shifted.mul(&f.partial(&var))?)?;
    }
    Ok(out)
}

/// Iterated total derivative D_I; the factors commute, so the iteration
/// order does not matter.
pub fn total_derivative_multi(f: &Expr, idx: &MultiIndex) -> Result<Expr> {
    if idx.len() != f.context().indep_count() {
        return Err(Error::ContextMismatch);
    }
    let mut out = f.clone();
    for j in 0..idx.len() {
        for _ in 0..idx.get(j) {
            out = total_derivative(&out, j)?;
        }
    }
    Ok(out)
}

/// Applies the prolongation of an evolutionary field to an expression:
/// the sum of (D_I phi^alpha) * df/du^alpha_I over the jet variables
/// actually present in `f`.
pub fn prolong_apply(field: &EvolutionaryField, f: &Expr) -> Result<Expr> {
    if field.context() != f.context() {
        return Err(Error::ContextMismatch);
    }
    let ctx = f.context().clone();
    let mut derived: HashMap<JetVar, Expr> = HashMap::new();
    let mut out = Expr::zero(&ctx);
    for var in f.dependent_vars() {
        let coeff = match derived.get(&var) {
            Some(e) => e.clone(),
            None => {
                let e = total_derivative_multi(field.characteristic(var.dep), &var.idx)?;
                derived.insert(var.clone(), e.clone());
                e
            }
        };
        out = out.add(&coeff.mul(&f.partial(&var))?)?;
    }
    Ok(out)
}

/// Div M = sum of D_i M_i; the list must have one entry per independent
/// variable.
pub fn divergence(witnesses: &[Expr]) -> Result<Expr> {
    let Some(first) = witnesses.first() else {
        return Err(Error::ArityMismatch {
            expected: 1,
            got: 0,
        });
    };
    let ctx = first.context().clone();
    if witnesses.len() != ctx.indep_count() {
        return Err(Error::ArityMismatch {
            expected: ctx.indep_count(),
            got: witnesses.len(),
        });
    }
    let mut out = Expr::zero(&ctx);
    for (i, w) in witnesses.iter().enumerate() {
        if w.context() != &ctx {
            return Err(Error::ContextMismatch);
        }
        out = out.add(&total_derivative(w, i)?)?;
    }
    Ok(out)
}

/// The full variational derivative delta f / delta u^alpha: the alternating
/// sum of D_I applied to df/du^alpha_I over all jet variables of u^alpha
/// present in `f`. Annihilates total divergences.
pub fn euler_operator(f: &Expr, dep: usize) -> Result<Expr> {
    f.context().check_dep(dep)?;
    let ctx = f.context().clone();
    let mut out = Expr::zero(&ctx);
    for var in f.dependent_vars() {
        if var.dep != dep {
            continue;
        }
        let term = total_derivative_multi(&f.partial(&var), &var.idx)?;
        out = if var.order() % 2 == 0 {
            out.add(&term)?
        } else {
            out.sub(&term)?
        };
    }
    Ok(out)
}

/// Highest jet order supported by the restricted variational derivatives.
const RESTRICTED_MAX_ORDER: u32 = 2;

fn check_second_order(l: &Expr) -> Result<()> {
    let found = l.max_order().total;
    if found > RESTRICTED_MAX_ORDER {
        Err(Error::OrderOverflow {
            found,
            max: RESTRICTED_MAX_ORDER,
        })
    } else {
        Ok(())
    }
}

fn jet_expr(ctx: &Arc<Context>, dep: usize, idx: MultiIndex) -> JetVar {
    let _ = ctx;
    JetVar::new(dep, idx)
}

/// Plane-(i,j) variational derivative of a second-order coefficient:
///
/// dL/du - D_i dL/du_i - D_j dL/du_j + D_i^2 dL/du_ii + D_i D_j dL/du_ij
/// + D_j^2 dL/du_jj.
///
/// Only derivatives in the two plane directions are integrated by parts;
/// jet variables of other directions ride along untouched.
pub fn restricted_delta_u(l: &Expr, dep: usize, i: usize, j: usize) -> Result<Expr> {
    let ctx = l.context().clone();
    ctx.check_dep(dep)?;
    ctx.check_indep(i)?;
    ctx.check_indep(j)?;
    check_second_order(l)?;
    let dim = ctx.indep_count();
    let zero = MultiIndex::zero(dim);

    let mut out = l.partial(&jet_expr(&ctx, dep, zero.clone()));
    for &dir in &[i, j] {
        let first = l.partial(&jet_expr(&ctx, dep, zero.bump(dir)));
        out = out.sub(&total_derivative(&first, dir)?)?;
    }
    for &(a, b) in &[(i, i), (i, j), (j, j)] {
        let second = l.partial(&jet_expr(&ctx, dep, zero.bump(a).bump(b)));
        out = out.add(&total_derivative(&total_derivative(&second, a)?, b)?)?;
    }
    Ok(out)
}

/// First-order restricted variational derivative
/// dL/du_k - D_i dL/du_ik - D_j dL/du_jk; `k` may coincide with a plane
/// direction.
pub fn restricted_delta_u_k(l: &Expr, dep: usize, k: usize, i: usize, j: usize) -> Result<Expr> {
    let ctx = l.context().clone();
    ctx.check_dep(dep)?;
    ctx.check_indep(i)?;
    ctx.check_indep(j)?;
    ctx.check_indep(k)?;
    check_second_order(l)?;
    let dim = ctx.indep_count();
    let zero = MultiIndex::zero(dim);

    let mut out = l.partial(&jet_expr(&ctx, dep, zero.bump(k)));
    for &dir in &[i, j] {
        let second = l.partial(&jet_expr(&ctx, dep, zero.bump(dir).bump(k)));
        out = out.sub(&total_derivative(&second, dir)?)?;
    }
    Ok(out)
}

/// Second-order restricted variational derivative: the plain partial
/// dL/du_km. (First-order corrections for indices touching the plane are
/// deliberately not added; the operator is exactly the displayed partial.)
pub fn restricted_delta_u_km(l: &Expr, dep: usize, k: usize, m: usize) -> Result<Expr> {
    let ctx = l.context().clone();
    ctx.check_dep(dep)?;
    ctx.check_indep(k)?;
    ctx.check_indep(m)?;
    let dim = ctx.indep_count();
    let idx = MultiIndex::zero(dim).bump(k).bump(m);
    Ok(l.partial(&jet_expr(&ctx, dep, idx)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_expr;

    fn ctx3() -> Arc<Context> {
        Context::shared(&["x", "y", "z"], &["u"]).unwrap()
    }

    fn p(ctx: &Arc<Context>, text: &str) -> Expr {
        parse_expr(text, ctx).unwrap()
    }

    #[test]
    fn chain_rule_through_trig() {
        let ctx = ctx3();
        let d = total_derivative(&p(&ctx, "cos(u)"), 0).unwrap();
        assert_eq!(d, p(&ctx, "-u_x*sin(u)"));
        assert_eq!(
            total_derivative(&Expr::integer(&ctx, 7), 2).unwrap(),
            Expr::zero(&ctx)
        );
    }

    #[test]
    fn derivative_of_second_lagrangian_coefficient() {
        let ctx = ctx3();
        let m = p(&ctx, "1/2*u_x*u_z - 1/8*u_x^4 + 1/2*u_xx^2");
        let dy = total_derivative(&m, 1).unwrap();
        let expected = p(
            &ctx,
            "1/2*u_xy*u_z + 1/2*u_x*u_yz - 1/2*u_x^3*u_xy + u_xx*u_xxy",
        );
        assert_eq!(dy, expected);
    }

    #[test]
    fn iterated_derivative_of_sin() {
        let ctx = ctx3();
        // frozen by applying D_x twice by hand
        let d2 = total_derivative_multi(
            &p(&ctx, "sin(u)"),
            &MultiIndex::new(vec![2, 0, 0]),
        )
        .unwrap();
        assert_eq!(d2, p(&ctx, "u_xx*cos(u) - u_x^2*sin(u)"));
        // empty multi-index is the identity
        let f = p(&ctx, "u_x*cos(u) - 3");
        assert_eq!(
            total_derivative_multi(&f, &MultiIndex::zero(3)).unwrap(),
            f
        );
        assert_eq!(
            total_derivative_multi(&p(&ctx, "u"), &MultiIndex::new(vec![1, 1, 0])).unwrap(),
            p(&ctx, "u_xy")
        );
    }

    #[test]
    fn index_out_of_range_is_reported() {
        let ctx = ctx3();
        assert!(matches!(
            total_derivative(&p(&ctx, "u"), 3),
            Err(Error::IndepIndexOutOfRange { index: 3, dim: 3 })
        ));
        assert!(matches!(
            euler_operator(&p(&ctx, "u"), 1),
            Err(Error::DepIndexOutOfRange { index: 1, count: 1 })
        ));
        assert!(matches!(
            EvolutionaryField::new(&ctx, vec![]),
            Err(Error::ArityMismatch { expected: 1, got: 0 })
        ));
    }

    #[test]
    fn prolongation_of_the_flow_characteristic() {
        let ctx = ctx3();
        let phi = p(&ctx, "u_xxx + 1/2*u_x^3");
        let field = EvolutionaryField::new(&ctx, vec![phi.clone()]).unwrap();
        let lagr = p(&ctx, "1/2*u_x*u_y - cos(u)");
        let applied = prolong_apply(&field, &lagr).unwrap();
        // 1/2 (D_y phi u_x + D_x phi u_y) + phi sin u
        let dphix = total_derivative(&phi, 0).unwrap();
        let dphiy = total_derivative(&phi, 1).unwrap();
        let half = p(&ctx, "1/2");
        let expected = half
            .mul(&dphiy.mul(&p(&ctx, "u_x")).unwrap())
            .unwrap()
            .add(&half.mul(&dphix.mul(&p(&ctx, "u_y")).unwrap()).unwrap())
            .unwrap()
            .add(&phi.mul(&p(&ctx, "sin(u)")).unwrap())
            .unwrap();
        assert_eq!(applied, expected);

        assert!(prolong_apply(&EvolutionaryField::zero(&ctx), &lagr)
            .unwrap()
            .is_zero());
        assert!(prolong_apply(&field, &Expr::integer(&ctx, 4))
            .unwrap()
            .is_zero());
    }

    #[test]
    fn divergence_of_the_symmetry_witnesses() {
        // D_x N + D_y M for the sine-Gordon witness pair, expanded by hand
        let ctx = ctx3();
        let n = p(
            &ctx,
            "1/2*(u_xxx + 1/2*u_x^3)*u_y - 1/2*u_x^2*cos(u) - u_xx*(u_xy - sin(u))",
        );
        let m = p(&ctx, "1/2*(u_xxx + 1/2*u_x^3)*u_x - 1/8*u_x^4 + 1/2*u_xx^2");
        let div = divergence(&[n, m, Expr::zero(&ctx)]).unwrap();
        let expected = p(
            &ctx,
            "1/2*u_x*u_xxxy + 3/4*u_x^3*u_xy + 1/2*u_y*u_xxxx + 3/4*u_x^2*u_xx*u_y \
             + 1/2*u_x^3*sin(u) + u_xxx*sin(u)",
        );
        assert_eq!(div, expected);
    }

    #[test]
    fn divergence_product_rule() {
        let ctx2 = Context::shared(&["x", "y"], &["u"]).unwrap();
        let d = divergence(&[p(&ctx2, "u^2"), p(&ctx2, "u^2")]).unwrap();
        assert_eq!(d, p(&ctx2, "2*u*u_x + 2*u*u_y"));
        assert!(divergence(&[Expr::zero(&ctx2), Expr::zero(&ctx2)])
            .unwrap()
            .is_zero());
        assert!(matches!(
            divergence(&[p(&ctx2, "u")]),
            Err(Error::ArityMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn euler_operator_values() {
        let ctx = ctx3();
        let lagr = p(&ctx, "1/2*u_x*u_y - cos(u)");
        assert_eq!(
            euler_operator(&lagr, 0).unwrap(),
            p(&ctx, "sin(u) - u_xy")
        );
        let m = p(&ctx, "1/2*u_z*u_x - 1/8*u_x^4 + 1/2*u_xx^2");
        assert_eq!(
            euler_operator(&m, 0).unwrap(),
            p(&ctx, "-u_xz + 3/2*u_x^2*u_xx + u_xxxx")
        );
        // divergences are annihilated
        let f = total_derivative(&p(&ctx, "u^2*u_xx"), 0).unwrap();
        assert!(euler_operator(&f, 0).unwrap().is_zero());
    }

    #[test]
    fn restricted_delta_u_matches_displayed_cases() {
        let ctx = ctx3();
        let lagr = p(&ctx, "1/2*u_x*u_y - cos(u)");
        assert_eq!(
            restricted_delta_u(&lagr, 0, 0, 1).unwrap(),
            p(&ctx, "sin(u) - u_xy")
        );
        // L_23 = -N; its plane variational derivative vanishes on u_yz = ...
        let l23 = p(
            &ctx,
            "-(1/2*u_y*u_z - 1/2*u_x^2*cos(u) - u_xx*(u_xy - sin(u)))",
        );
        assert_eq!(
            restricted_delta_u(&l23, 0, 1, 2).unwrap(),
            p(&ctx, "u_yz - u_xx*cos(u) - 1/2*u_x^2*sin(u)")
        );
        assert!(restricted_delta_u(&Expr::integer(&ctx, 3), 0, 0, 1)
            .unwrap()
            .is_zero());
        // order bound is enforced
        let third = p(&ctx, "u_xxx");
        assert!(matches!(
            restricted_delta_u(&third, 0, 0, 1),
            Err(Error::OrderOverflow { found: 3, max: 2 })
        ));
    }

    #[test]
    fn restricted_delta_u_k_cases() {
        let ctx = ctx3();
        let n = p(
            &ctx,
            "1/2*u_y*u_z - 1/2*u_x^2*cos(u) - u_xx*(u_xy - sin(u))",
        );
        // dN/du_x - D_y dN/du_yx - D_z dN/du_zx, plane (y, z)
        assert_eq!(
            restricted_delta_u_k(&n, 0, 0, 1, 2).unwrap(),
            p(&ctx, "u_xxy - u_x*cos(u)")
        );
        // k equal to a plane direction reproduces the momentum expression
        let m = p(&ctx, "1/2*u_z*u_x - 1/8*u_x^4 + 1/2*u_xx^2");
        assert_eq!(
            restricted_delta_u_k(&m, 0, 0, 0, 2).unwrap(),
            p(&ctx, "1/2*u_z - 1/2*u_x^3 - u_xxx")
        );
        assert!(restricted_delta_u_k(&p(&ctx, "u_x^2"), 0, 1, 0, 2)
            .unwrap()
            .is_zero());
    }

    #[test]
    fn restricted_delta_u_km_is_a_plain_partial() {
        let ctx = ctx3();
        let l23 = p(
            &ctx,
            "-(1/2*u_y*u_z - 1/2*u_x^2*cos(u) - u_xx*(u_xy - sin(u)))",
        );
        assert_eq!(
            restricted_delta_u_km(&l23, 0, 0, 0).unwrap(),
            p(&ctx, "u_xy - sin(u)")
        );
        let lagr = p(&ctx, "1/2*u_x*u_y - cos(u)");
        assert!(restricted_delta_u_km(&lagr, 0, 0, 1).unwrap().is_zero());
        assert_eq!(
            restricted_delta_u_km(&p(&ctx, "1/2*u_xx^2"), 0, 0, 0).unwrap(),
            p(&ctx, "u_xx")
        );
    }

    #[test]
    fn two_dependent_variables() {
        let ctx = Context::shared(&["x", "y"], &["u", "v"]).unwrap();
        let lagr = p(&ctx, "u_x*v_y + sin(u)*cos(v)");

        assert_eq!(
            euler_operator(&lagr, 0).unwrap(),
            p(&ctx, "cos(u)*cos(v) - v_xy")
        );
        assert_eq!(
            euler_operator(&lagr, 1).unwrap(),
            p(&ctx, "-sin(u)*sin(v) - u_xy")
        );

        // prolongation sums over both characteristics
        let field =
            EvolutionaryField::new(&ctx, vec![p(&ctx, "v"), p(&ctx, "u")]).unwrap();
        let applied = prolong_apply(&field, &lagr).unwrap();
        let expected = p(
            &ctx,
            "v_x*v_y + v*cos(u)*cos(v) + u_x*u_y - u*sin(u)*sin(v)",
        );
        assert_eq!(applied, expected);

        // a divergence is annihilated by the Euler operator of every field
        let f = divergence(&[p(&ctx, "u*v"), p(&ctx, "sin(u)*v_y")]).unwrap();
        assert!(euler_operator(&f, 0).unwrap().is_zero());
        assert!(euler_operator(&f, 1).unwrap().is_zero());
    }

    #[test]
    fn restriction_agrees_with_full_euler_on_plane_data() {
        // for L built from plane-(x,y) variables up to order 2, the
        // restricted derivative is the full variational derivative
        let ctx = ctx3();
        let samples = [
            "1/2*u_x*u_y - cos(u)",
            "u_xx*u_yy - u_xy^2",
            "u*u_x*u_y + sin(u)*u_xx",
            "u_x^2 + u_y^2 + 2*cos(u)",
        ];
        for text in samples {
            let l = p(&ctx, text);
            assert_eq!(
                restricted_delta_u(&l, 0, 0, 1).unwrap(),
                euler_operator(&l, 0).unwrap(),
                "restriction mismatch for {text}"
            );
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_expr() -> impl Strategy<Value = Expr> {
            // modest random expressions over (x, y, z)
            proptest::collection::vec(
                (
                    -3i64..=3,
                    0u32..=2,
                    0u32..=2,
                    0u32..=1,
                    0u32..=2,
                    0usize..=2,
                ),
                1..5,
            )
            .prop_map(|rows| {
                let ctx = ctx3();
                let mut out = Expr::zero(&ctx);
                for (c, a, b, g, pw, trig) in rows {
                    let jet = Expr::jet(&ctx, JetVar::new(0, MultiIndex::new(vec![a, b, g])))
                        .unwrap()
                        .pow(pw);
                    let t = match trig {
                        1 => Expr::sin(&ctx, 0).unwrap(),
                        2 => Expr::cos(&ctx, 0).unwrap(),
                        _ => Expr::integer(&ctx, 1),
                    };
                    let term = Expr::integer(&ctx, c).mul(&jet).unwrap().mul(&t).unwrap();
                    out = out.add(&term).unwrap();
                }
                out
            })
        }

        proptest! {
            #[test]
            fn total_derivatives_commute(f in arb_expr(), i in 0usize..3, j in 0usize..3) {
                let dij = total_derivative(&total_derivative(&f, i).unwrap(), j).unwrap();
                let dji = total_derivative(&total_derivative(&f, j).unwrap(), i).unwrap();
                prop_assert_eq!(dij, dji);
            }

            #[test]
            fn leibniz_rule(f in arb_expr(), g in arb_expr(), j in 0usize..3) {
                let lhs = total_derivative(&f.mul(&g).unwrap(), j).unwrap();
                let rhs = total_derivative(&f, j).unwrap().mul(&g).unwrap()
                    .add(&f.mul(&total_derivative(&g, j).unwrap()).unwrap()).unwrap();
                prop_assert_eq!(lhs, rhs);
            }

            #[test]
            fn prolongation_commutes_with_derivatives(
                phi in arb_expr(), f in arb_expr(), j in 0usize..3
            ) {
                let ctx = f.context().clone();
                let field = EvolutionaryField::new(&ctx, vec![phi]).unwrap();
                let lhs = prolong_apply(&field, &total_derivative(&f, j).unwrap()).unwrap();
                let rhs = total_derivative(&prolong_apply(&field, &f).unwrap(), j).unwrap();
                prop_assert_eq!(lhs, rhs);
            }

            #[test]
            fn prolongation_leibniz(phi in arb_expr(), f in arb_expr(), g in arb_expr()) {
                let ctx = f.context().clone();
                let field = EvolutionaryField::new(&ctx, vec![phi]).unwrap();
                let lhs = prolong_apply(&field, &f.mul(&g).unwrap()).unwrap();
                let rhs = prolong_apply(&field, &f).unwrap().mul(&g).unwrap()
                    .add(&f.mul(&prolong_apply(&field, &g).unwrap()).unwrap()).unwrap();
                prop_assert_eq!(lhs, rhs);
            }

            #[test]
            fn euler_annihilates_divergences(
                a in arb_expr(), b in arb_expr(), c in arb_expr()
            ) {
                let f = divergence(&[a, b, c]).unwrap();
                prop_assert!(euler_operator(&f, 0).unwrap().is_zero());
            }
        }
    }
}
