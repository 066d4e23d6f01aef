//! Exact symbolic differentiation.
//!
//! The chain rule is applied throughout; the radial basis functions
//! differentiate through their closed forms:
//!
//! ```text
//! rbf1'(r) = -2c * r * rbf1(r) * r'
//! rbf2'(r) = r * r' / rbf2(r)
//! rbf3'(r) = -r * rbf3(r) * rbf4(r) * r'
//! rbf4'(r) = -2 * r * rbf4(r)^2 * r'
//! ```
//!
//! The Gaussian rule is the only one that mentions the shape constant
//! explicitly, which is why differentiation takes the [`RbfConfig`] and
//! bakes the run's `c` into the derivative as a constant.
//!
//! Derivatives of `log`, `sqrt`, and quotients produce expressions whose
//! domain restrictions surface at evaluation time, not here.

use super::simplify::simplify;
use super::{BinaryOp, Expression, RbfConfig, UnaryFn, Var};

/// Exact derivative of `e` with respect to `var`, constant-folded.
pub fn differentiate(e: &Expression, var: Var, rbf: &RbfConfig) -> Expression {
    simplify(&derive(e, var, rbf))
}

fn derive(e: &Expression, var: Var, rbf: &RbfConfig) -> Expression {
    match e {
        Expression::Const(_) => Expression::Const(0.0),
        Expression::Var(v) => {
            if *v == var {
                Expression::Const(1.0)
            } else {
                Expression::Const(0.0)
            }
        }
        Expression::Binary(op, l, r) => {
            let dl = derive(l, var, rbf);
            let dr = derive(r, var, rbf);
            match op {
                BinaryOp::Add => add(dl, dr),
                BinaryOp::Sub => sub(dl, dr),
                BinaryOp::Mul => add(mul(dl, (**r).clone()), mul((**l).clone(), dr)),
                BinaryOp::Div => {
                    // (l/r)' = (l'r - lr') / r^2
                    let num = sub(mul(dl, (**r).clone()), mul((**l).clone(), dr));
                    let den = mul((**r).clone(), (**r).clone());
                    div(num, den)
                }
            }
        }
        Expression::Unary(f, arg) => {
            let u = (**arg).clone();
            let du = derive(arg, var, rbf);
            let outer = match f {
                UnaryFn::Sin => Expression::unary(UnaryFn::Cos, u),
                UnaryFn::Cos => neg(Expression::unary(UnaryFn::Sin, u)),
                UnaryFn::Exp => Expression::unary(UnaryFn::Exp, u),
                UnaryFn::Log => div(Expression::Const(1.0), u),
                UnaryFn::Sqrt => {
                    div(Expression::Const(1.0), mul(Expression::Const(2.0), Expression::unary(UnaryFn::Sqrt, u)))
                }
                UnaryFn::Rbf1 => mul(
                    mul(Expression::Const(-2.0 * rbf.c), u.clone()),
                    Expression::unary(UnaryFn::Rbf1, u),
                ),
                UnaryFn::Rbf2 => div(u.clone(), Expression::unary(UnaryFn::Rbf2, u)),
                UnaryFn::Rbf3 => neg(mul(
                    u.clone(),
                    mul(
                        Expression::unary(UnaryFn::Rbf3, u.clone()),
                        Expression::unary(UnaryFn::Rbf4, u),
                    ),
                )),
                UnaryFn::Rbf4 => {
                    let r4 = Expression::unary(UnaryFn::Rbf4, u.clone());
                    neg(mul(mul(Expression::Const(2.0), u), mul(r4.clone(), r4)))
                }
            };
            mul(outer, du)
        }
    }
}

// Folding constructors keep the raw derivative from drowning in 0 and 1
// factors before the final simplify pass.

fn add(l: Expression, r: Expression) -> Expression {
    match (&l, &r) {
        (Expression::Const(a), _) if *a == 0.0 => r,
        (_, Expression::Const(b)) if *b == 0.0 => l,
        _ => Expression::binary(BinaryOp::Add, l, r),
    }
}

fn sub(l: Expression, r: Expression) -> Expression {
    match (&l, &r) {
        (_, Expression::Const(b)) if *b == 0.0 => l,
        _ => Expression::binary(BinaryOp::Sub, l, r),
    }
}

fn mul(l: Expression, r: Expression) -> Expression {
    match (&l, &r) {
        (Expression::Const(a), _) if *a == 0.0 => Expression::Const(0.0),
        (_, Expression::Const(b)) if *b == 0.0 => Expression::Const(0.0),
        (Expression::Const(a), _) if *a == 1.0 => r,
        (_, Expression::Const(b)) if *b == 1.0 => l,
        _ => Expression::binary(BinaryOp::Mul, l, r),
    }
}

fn div(l: Expression, r: Expression) -> Expression {
    match (&l, &r) {
        (_, Expression::Const(b)) if *b == 1.0 => l,
        _ => Expression::binary(BinaryOp::Div, l, r),
    }
}

fn neg(e: Expression) -> Expression {
    mul(Expression::Const(-1.0), e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{evaluate, Env, RbfConfig};

    fn x() -> Expression {
        Expression::var(Var::X)
    }

    fn d(e: &Expression) -> Expression {
        differentiate(e, Var::X, &RbfConfig::default())
    }

    /// Central finite difference, the independent oracle for derivatives.
    fn central_diff(e: &Expression, at: f64, h: f64, rbf: &RbfConfig) -> Option<f64> {
        let hi = evaluate(e, &Env::x(at + h), rbf).ok()?;
        let lo = evaluate(e, &Env::x(at - h), rbf).ok()?;
        Some((hi - lo) / (2.0 * h))
    }

    #[test]
    fn derivative_of_sin_is_cos() {
        assert_eq!(d(&Expression::unary(UnaryFn::Sin, x())), Expression::unary(UnaryFn::Cos, x()));
    }

    #[test]
    fn second_derivative_of_sin_3x() {
        let e = Expression::unary(UnaryFn::Sin, Expression::mul(Expression::constant(3.0), x()));
        let dd = d(&d(&e));
        let rbf = RbfConfig::default();
        for at in [-1.3, 0.2, 0.9, 2.4] {
            let got = evaluate(&dd, &Env::x(at), &rbf).unwrap();
            let want = -9.0 * (3.0 * at).sin();
            assert!((got - want).abs() < 1e-12, "at {at}: {got} vs {want}");
        }
    }

    #[test]
    fn rbf4_derivative_matches_hand_value() {
        // d/dx 1/(1+x^2) at x=1 is -0.5.
        let e = Expression::unary(UnaryFn::Rbf4, x());
        let got = evaluate(&d(&e), &Env::x(1.0), &RbfConfig::new(1.0)).unwrap();
        assert!((got - (-0.5)).abs() < 1e-12);
    }

    #[test]
    fn every_unary_matches_finite_differences() {
        let rbf = RbfConfig::new(1.3);
        let funcs = [
            UnaryFn::Sin,
            UnaryFn::Cos,
            UnaryFn::Exp,
            UnaryFn::Log,
            UnaryFn::Sqrt,
            UnaryFn::Rbf1,
            UnaryFn::Rbf2,
            UnaryFn::Rbf3,
            UnaryFn::Rbf4,
        ];
        // Composite argument exercises the chain rule.
        let arg = Expression::add(Expression::mul(Expression::constant(0.5), x()), Expression::constant(0.75));
        for f in funcs {
            let e = Expression::unary(f, arg.clone());
            let de = differentiate(&e, Var::X, &rbf);
            for at in [0.4, 1.1, 2.7] {
                let sym = evaluate(&de, &Env::x(at), &rbf).unwrap();
                let num = central_diff(&e, at, 1e-6, &rbf).unwrap();
                let scale = sym.abs().max(num.abs()).max(1.0);
                assert!(
                    (sym - num).abs() / scale < 1e-7,
                    "{f:?} at {at}: symbolic {sym} vs numeric {num}"
                );
            }
        }
    }

    #[test]
    fn quotient_rule_matches_finite_differences() {
        // (x*x+1)/(x-3)
        let e = Expression::div(
            Expression::add(Expression::mul(x(), x()), Expression::constant(1.0)),
            Expression::sub(x(), Expression::constant(3.0)),
        );
        let de = d(&e);
        let rbf = RbfConfig::default();
        for at in [-2.0, 0.5, 1.9] {
            let sym = evaluate(&de, &Env::x(at), &rbf).unwrap();
            let num = central_diff(&e, at, 1e-6, &rbf).unwrap();
            assert!((sym - num).abs() / sym.abs().max(1.0) < 1e-7);
        }
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        assert_eq!(d(&Expression::constant(42.0)), Expression::Const(0.0));
        assert_eq!(d(&Expression::var(Var::Y)), Expression::Const(0.0));
        assert_eq!(d(&x()), Expression::Const(1.0));
    }
}
