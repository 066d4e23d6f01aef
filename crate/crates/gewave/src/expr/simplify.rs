//! Value-preserving simplification: constant folding plus identity rules.
//!
//! Applied rules: fold constant subtrees (only when the result is finite,
//! so `1/0` still errors at evaluation), `e+0`, `0+e`, `e-0`, `e*1`, `1*e`,
//! `e*0`, `0*e`, `e/1`, and `0/k` for a nonzero constant `k`. Radial basis
//! functions of constants are left alone because their value depends on the
//! runtime shape constant. The output evaluates identically to the input
//! wherever the input is defined.

use super::{BinaryOp, Expression, UnaryFn};

pub fn simplify(e: &Expression) -> Expression {
    match e {
        Expression::Const(_) | Expression::Var(_) => e.clone(),
        Expression::Binary(op, l, r) => {
            let l = simplify(l);
            let r = simplify(r);
            if let (Expression::Const(a), Expression::Const(b)) = (&l, &r) {
                let v = match op {
                    BinaryOp::Add => a + b,
                    BinaryOp::Sub => a - b,
                    BinaryOp::Mul => a * b,
                    BinaryOp::Div => a / b,
                };
                if v.is_finite() {
                    return Expression::Const(v);
                }
            }
            match (op, &l, &r) {
                (BinaryOp::Add, Expression::Const(a), _) if *a == 0.0 => r,
                (BinaryOp::Add, _, Expression::Const(b)) if *b == 0.0 => l,
                (BinaryOp::Sub, _, Expression::Const(b)) if *b == 0.0 => l,
                (BinaryOp::Mul, Expression::Const(a), _) if *a == 1.0 => r,
                (BinaryOp::Mul, _, Expression::Const(b)) if *b == 1.0 => l,
                (BinaryOp::Mul, Expression::Const(a), _) if *a == 0.0 => Expression::Const(0.0),
                (BinaryOp::Mul, _, Expression::Const(b)) if *b == 0.0 => Expression::Const(0.0),
                (BinaryOp::Div, _, Expression::Const(b)) if *b == 1.0 => l,
                (BinaryOp::Div, Expression::Const(a), Expression::Const(b))
                    if *a == 0.0 && *b != 0.0 =>
                {
                    Expression::Const(0.0)
                }
                _ => Expression::binary(*op, l, r),
            }
        }
        Expression::Unary(f, arg) => {
            let arg = simplify(arg);
            if let Expression::Const(v) = arg {
                let folded = match f {
                    UnaryFn::Sin => Some(v.sin()),
                    UnaryFn::Cos => Some(v.cos()),
                    UnaryFn::Exp => Some(v.exp()),
                    UnaryFn::Log => (v > 0.0).then(|| v.ln()),
                    UnaryFn::Sqrt => (v >= 0.0).then(|| v.sqrt()),
                    // Value depends on the runtime shape constant.
                    UnaryFn::Rbf1 | UnaryFn::Rbf2 | UnaryFn::Rbf3 | UnaryFn::Rbf4 => None,
                };
                if let Some(v) = folded {
                    if v.is_finite() {
                        return Expression::Const(v);
                    }
                }
            }
            Expression::unary(*f, arg)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{evaluate, parse_expression, Env, RbfConfig, Var};

    fn x() -> Expression {
        Expression::var(Var::X)
    }

    #[test]
    fn strips_identity_operations() {
        // (x*1)+0 -> x
        let e = Expression::add(
            Expression::mul(x(), Expression::constant(1.0)),
            Expression::constant(0.0),
        );
        assert_eq!(simplify(&e), x());
    }

    #[test]
    fn leaves_irreducible_expressions_alone() {
        let e = parse_expression("3/x").unwrap();
        assert_eq!(simplify(&e), e);
    }

    #[test]
    fn folds_constant_products() {
        let e = Expression::mul(Expression::constant(2.0), Expression::constant(3.0));
        assert_eq!(simplify(&e), Expression::Const(6.0));
    }

    #[test]
    fn does_not_fold_division_by_zero() {
        let e = Expression::div(Expression::constant(1.0), Expression::constant(0.0));
        assert_eq!(simplify(&e), e);
    }

    #[test]
    fn does_not_fold_rbf_of_constant() {
        let e = Expression::unary(UnaryFn::Rbf1, Expression::constant(2.0));
        assert_eq!(simplify(&e), e);
    }

    #[test]
    fn multiply_by_zero_collapses() {
        let e = Expression::mul(parse_expression("sin(x)+3").unwrap(), Expression::constant(0.0));
        assert_eq!(simplify(&e), Expression::Const(0.0));
    }

    #[test]
    fn preserves_value_where_defined() {
        let rbf = RbfConfig::new(0.7);
        let samples = [
            "sqrt(3/x)*1+0",
            "sin(x)/1-0",
            "2*3+x",
            "rbf1(x*1)+rbf4(x+0)",
            "log(x)+exp(1/x)",
            "(x-0)*(1*x)",
        ];
        for text in samples {
            let e = parse_expression(text).unwrap();
            let s = simplify(&e);
            for i in 0..100 {
                let at = -4.9 + 0.1 * i as f64;
                let before = evaluate(&e, &Env::x(at), &rbf);
                if let Ok(v) = before {
                    let after = evaluate(&s, &Env::x(at), &rbf).unwrap();
                    assert!(
                        (v - after).abs() <= 1e-12 * v.abs().max(1.0),
                        "'{text}' at {at}: {v} vs {after}"
                    );
                }
            }
        }
    }
}
