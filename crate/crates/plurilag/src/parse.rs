//! Expression grammar and parser.
//!
//! The grammar, in order of binding strength:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor ('*' factor)*
//! factor := '-' factor | power
//! power  := atom ('^' nat)?
//! atom   := number | variable | 'sin' '(' dep ')' | 'cos' '(' dep ')'
//!         | '(' expr ')' | '@' name          (references, resolver only)
//! number := nat ('/' nat)?
//! ```
//!
//! Variables are dependent-variable names, optionally with a jet suffix:
//! subscript form `u_xxy` (each letter names a single-character independent
//! variable, repetition counts derivatives) or bracket form `u[2,1,0]` (one
//! count per independent variable, declared order). Bare independent
//! variables are rejected: expressions are autonomous. Implicit
//! multiplication is not part of the grammar.

use crate::context::{Context, JetVar, MultiIndex};
use crate::error::{Error, Result};
use crate::expr::Expr;
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::Zero;
use std::collections::HashMap;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(BigUint),
    /// identifier, possibly with an underscore subscript (`u`, `u_xxy`)
    Name(String),
    /// `@name` reference
    Ref(String),
    Plus,
    Minus,
    Star,
    Caret,
    Slash,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
}

struct Lexed {
    token: Token,
    /// 1-based column of the first character
    col: usize,
}

fn err_at(col: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        col,
        msg: msg.into(),
    }
}

fn lex(text: &str) -> Result<Vec<Lexed>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        match c {
            ' ' | '\t' => {
                i += 1;
            }
            '+' => {
                out.push(Lexed { token: Token::Plus, col });
                i += 1;
            }
            '-' => {
                out.push(Lexed { token: Token::Minus, col });
                i += 1;
            }
            '*' => {
                out.push(Lexed { token: Token::Star, col });
                i += 1;
            }
            '^' => {
                out.push(Lexed { token: Token::Caret, col });
                i += 1;
            }
            '/' => {
                out.push(Lexed { token: Token::Slash, col });
                i += 1;
            }
            '(' => {
                out.push(Lexed { token: Token::LParen, col });
                i += 1;
            }
            ')' => {
                out.push(Lexed { token: Token::RParen, col });
                i += 1;
            }
            '[' => {
                out.push(Lexed { token: Token::LBracket, col });
                i += 1;
            }
            ']' => {
                out.push(Lexed { token: Token::RBracket, col });
                i += 1;
            }
            ',' => {
                out.push(Lexed { token: Token::Comma, col });
                i += 1;
            }
            '@' => {
                i += 1;
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                if start == i {
                    return Err(err_at(col, "expected a name after `@`"));
                }
                let name: String = chars[start..i].iter().collect();
                out.push(Lexed { token: Token::Ref(name), col });
            }
            _ if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let digits: String = chars[start..i].iter().collect();
                let value = digits
                    .parse::<BigUint>()
                    .map_err(|_| err_at(col, "invalid integer literal"))?;
                out.push(Lexed { token: Token::Number(value), col });
            }
            _ if c.is_ascii_alphabetic() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                    i += 1;
                }
                // a single underscore glues the jet subscript to the name
                if i < chars.len() && chars[i] == '_' {
                    i += 1;
                    let sub_start = i;
                    while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                        i += 1;
                    }
                    if sub_start == i {
                        return Err(err_at(col, "empty jet subscript after `_`"));
                    }
                }
                let name: String = chars[start..i].iter().collect();
                out.push(Lexed { token: Token::Name(name), col });
            }
            _ => {
                return Err(err_at(col, format!("unexpected character `{c}`")));
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    ctx: &'a Arc<Context>,
    tokens: Vec<Lexed>,
    pos: usize,
    end_col: usize,
    definitions: Option<&'a HashMap<String, Expr>>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|l| &l.token)
    }

    fn col(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map(|l| l.col)
            .unwrap_or(self.end_col)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).map(|l| l.token.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, token: Token, what: &str) -> Result<()> {
        let col = self.col();
        match self.next() {
            Some(t) if t == token => Ok(()),
            _ => Err(err_at(col, format!("expected {what}"))),
        }
    }

    fn parse_expr(&mut self) -> Result<Expr> {
        let mut acc = self.parse_term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.next();
                    acc = acc.add(&self.parse_term()?)?;
                }
                Some(Token::Minus) => {
                    self.next();
                    acc = acc.sub(&self.parse_term()?)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn parse_term(&mut self) -> Result<Expr> {
        let mut acc = self.parse_factor()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    self.next();
                    acc = acc.mul(&self.parse_factor()?)?;
                }
                Some(Token::Slash) => {
                    return Err(err_at(
                        self.col(),
                        "`/` is only allowed inside rational literals like 1/2",
                    ));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn parse_factor(&mut self) -> Result<Expr> {
        if matches!(self.peek(), Some(Token::Minus)) {
            self.next();
            Ok(self.parse_factor()?.neg())
        } else {
            self.parse_power()
        }
    }

    fn parse_power(&mut self) -> Result<Expr> {
        let base = self.parse_atom()?;
        if matches!(self.peek(), Some(Token::Caret)) {
            self.next();
            let col = self.col();
            if matches!(self.peek(), Some(Token::Minus)) {
                return Err(err_at(col, "negative exponents are unsupported"));
            }
            match self.next() {
                Some(Token::Number(n)) => {
                    let exp = u32::try_from(&n)
                        .map_err(|_| err_at(col, "exponent too large"))?;
                    Ok(base.pow(exp))
                }
                _ => Err(err_at(col, "expected a non-negative integer exponent")),
            }
        } else {
            Ok(base)
        }
    }

    fn parse_atom(&mut self) -> Result<Expr> {
        let col = self.col();
        match self.next() {
            Some(Token::Number(n)) => {
                // look ahead for a rational literal n/d
                if matches!(self.peek(), Some(Token::Slash)) {
                    self.next();
                    let dcol = self.col();
                    match self.next() {
                        Some(Token::Number(d)) => {
                            if d.is_zero() {
                                return Err(err_at(dcol, "zero denominator"));
                            }
                            let r = BigRational::new(n.into(), d.into());
                            Ok(Expr::constant(self.ctx, r))
                        }
                        _ => Err(err_at(dcol, "expected a denominator after `/`")),
                    }
                } else {
                    Ok(Expr::constant(
                        self.ctx,
                        BigRational::from_integer(n.into()),
                    ))
                }
            }
            Some(Token::LParen) => {
                let inner = self.parse_expr()?;
                self.expect(Token::RParen, "`)`")?;
                Ok(inner)
            }
            Some(Token::Ref(name)) => match self.definitions.and_then(|d| d.get(&name)) {
                Some(expr) => {
                    if expr.context() != self.ctx {
                        return Err(err_at(col, format!("`@{name}` has a different context")));
                    }
                    Ok(expr.clone())
                }
                None => Err(err_at(col, format!("unknown reference `@{name}`"))),
            },
            Some(Token::Name(name)) => self.resolve_name(&name, col),
            _ => Err(err_at(col, "expected an expression")),
        }
    }

    /// Resolves an identifier: trig call, dependent variable or jet variable.
    fn resolve_name(&mut self, name: &str, col: usize) -> Result<Expr> {
        if name == "sin" || name == "cos" {
            self.expect(Token::LParen, "`(` after trig function")?;
            let argcol = self.col();
            let dep = match self.next() {
                Some(Token::Name(arg)) => match self.ctx.dep_index(&arg) {
                    Some(d) => d,
                    None => {
                        return Err(err_at(
                            argcol,
                            format!(
                                "trig functions take an undifferentiated dependent variable, got `{arg}`"
                            ),
                        ))
                    }
                },
                _ => {
                    return Err(err_at(
                        argcol,
                        "trig functions take an undifferentiated dependent variable",
                    ))
                }
            };
            self.expect(Token::RParen, "`)`")?;
            return if name == "sin" {
                Expr::sin(self.ctx, dep)
            } else {
                Expr::cos(self.ctx, dep)
            };
        }

        let (base, subscript) = match name.split_once('_') {
            Some((b, s)) => (b, Some(s)),
            None => (name, None),
        };
        let Some(dep) = self.ctx.dep_index(base) else {
            if self.ctx.indep_index(base).is_some() {
                return Err(err_at(
                    col,
                    format!("independent variable `{base}` cannot appear in an expression"),
                ));
            }
            return Err(err_at(col, format!("unknown variable `{base}`")));
        };

        let dim = self.ctx.indep_count();
        let mut counts = vec![0u32; dim];
        if let Some(sub) = subscript {
            for letter in sub.chars() {
                let mut buf = [0u8; 4];
                let s = letter.encode_utf8(&mut buf);
                match self.ctx.indep_index(s) {
                    Some(j) => counts[j] += 1,
                    None => {
                        return Err(err_at(
                            col,
                            format!(
                                "`{letter}` in subscript of `{name}` is not a single-letter independent variable (use the bracket form for multi-letter names)"
                            ),
                        ))
                    }
                }
            }
        } else if matches!(self.peek(), Some(Token::LBracket)) {
            // bracket form u[i1,...,ip]
            self.next();
            for (j, slot) in counts.iter_mut().enumerate() {
                if j > 0 {
                    self.expect(Token::Comma, "`,` between derivative counts")?;
                }
                let ccol = self.col();
                match self.next() {
                    Some(Token::Number(n)) => {
                        *slot = u32::try_from(&n)
                            .map_err(|_| err_at(ccol, "derivative count too large"))?;
                    }
                    _ => return Err(err_at(ccol, "expected a derivative count")),
                }
            }
            self.expect(Token::RBracket, "`]`")?;
        }
        Expr::jet(self.ctx, JetVar::new(dep, MultiIndex::new(counts)))
    }
}

fn parse_with(
    text: &str,
    ctx: &Arc<Context>,
    definitions: Option<&HashMap<String, Expr>>,
) -> Result<Expr> {
    let tokens = lex(text)?;
    let end_col = text.chars().count() + 1;
    let mut parser = Parser {
        ctx,
        tokens,
        pos: 0,
        end_col,
        definitions,
    };
    let expr = parser.parse_expr()?;
    if parser.pos != parser.tokens.len() {
        return Err(err_at(parser.col(), "unexpected trailing input"));
    }
    Ok(expr)
}

/// Parses an expression over the given context into canonical form.
pub fn parse_expr(text: &str, ctx: &Arc<Context>) -> Result<Expr> {
    parse_with(text, ctx, None)
}

/// Like [`parse_expr`], but `@name` atoms resolve against the supplied
/// definitions. Used by the problem-file layer.
pub fn parse_expr_with_defs(
    text: &str,
    ctx: &Arc<Context>,
    definitions: &HashMap<String, Expr>,
) -> Result<Expr> {
    parse_with(text, ctx, Some(definitions))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx3() -> Arc<Context> {
        Context::shared(&["x", "y", "z"], &["u"]).unwrap()
    }

    #[test]
    fn parses_the_basic_lagrangian() {
        let ctx = ctx3();
        let lagr = parse_expr("1/2*u_x*u_y - cos(u)", &ctx).unwrap();
        assert_eq!(lagr.to_string(), "1/2*u_x*u_y - cos(u)");
    }

    #[test]
    fn bracket_and_subscript_forms_agree() {
        let ctx = ctx3();
        assert_eq!(
            parse_expr("u[0,0,1]", &ctx).unwrap(),
            parse_expr("u_z", &ctx).unwrap()
        );
        assert_eq!(
            parse_expr("u[2,1,0]", &ctx).unwrap(),
            parse_expr("u_xxy", &ctx).unwrap()
        );
    }

    #[test]
    fn parses_the_flow_characteristic() {
        let ctx = ctx3();
        let phi = parse_expr("u_xxx + 1/2*u_x^3", &ctx).unwrap();
        assert_eq!(phi.terms().len(), 2);
        assert_eq!(phi.to_string(), "1/2*u_x^3 + u_xxx");
    }

    #[test]
    fn rejects_unknowns_and_bad_syntax() {
        let ctx = ctx3();
        for (text, fragment) in [
            ("v_x", "unknown variable"),
            ("x", "independent variable"),
            ("u_w", "subscript"),
            ("sin(u_x)", "undifferentiated"),
            ("u u", "trailing"),
            ("2*", "expected an expression"),
            ("u^-1", "negative exponents"),
            ("u_x/u_y", "rational literals"),
            ("1/0", "zero denominator"),
            ("u[1,2]", "`,` between"),
            ("(u_x", "expected `)`"),
            ("u_", "empty jet subscript"),
            ("@L", "unknown reference"),
        ] {
            let err = parse_expr(text, &ctx).unwrap_err();
            let msg = err.to_string();
            assert!(
                msg.contains(fragment),
                "for `{text}` expected message containing `{fragment}`, got `{msg}`"
            );
        }
    }

    #[test]
    fn error_positions_are_reported() {
        let ctx = ctx3();
        let err = parse_expr("u_x + v", &ctx).unwrap_err();
        match err {
            Error::Parse { col, .. } => assert_eq!(col, 7),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn unary_minus_and_precedence() {
        let ctx = ctx3();
        assert_eq!(
            parse_expr("-u_x^2", &ctx).unwrap(),
            parse_expr("0 - u_x^2", &ctx).unwrap()
        );
        assert_eq!(
            parse_expr("-1/8", &ctx).unwrap(),
            parse_expr("0 - 1/8", &ctx).unwrap()
        );
        assert_eq!(
            parse_expr("2*u_x + u_y^2*3", &ctx).unwrap(),
            parse_expr("u_x + u_x + 3*u_y^2", &ctx).unwrap()
        );
        // `-` binds the whole factor, including a parenthesized product
        assert_eq!(
            parse_expr("-(u_x + 1)*(u_y - 1)", &ctx).unwrap(),
            parse_expr("-(u_x*u_y - u_x + u_y - 1)", &ctx).unwrap()
        );
    }

    #[test]
    fn references_resolve_with_definitions() {
        let ctx = ctx3();
        let mut defs = HashMap::new();
        defs.insert(
            "phi".to_owned(),
            parse_expr("u_xxx + 1/2*u_x^3", &ctx).unwrap(),
        );
        let m = parse_expr_with_defs("1/2*@phi*u_x - 1/8*u_x^4 + 1/2*u_xx^2", &ctx, &defs).unwrap();
        let expected =
            parse_expr("1/2*u_x*u_xxx + 1/8*u_x^4 + 1/2*u_xx^2", &ctx).unwrap();
        assert_eq!(m, expected);
    }

    #[test]
    fn expanded_witness_round_trips() {
        let ctx = ctx3();
        let n = parse_expr(
            "1/2*u_y*u_z - 1/2*u_x^2*cos(u) - u_xx*(u_xy - sin(u))",
            &ctx,
        )
        .unwrap();
        let printed = n.to_string();
        assert_eq!(parse_expr(&printed, &ctx).unwrap(), n);
        assert_eq!(Expr::zero(&ctx).to_string(), "0");
        assert_eq!(parse_expr("0", &ctx).unwrap(), Expr::zero(&ctx));
    }

    mod properties {
        use super::*;
        use crate::expr::{normalize, ExprTree};
        use proptest::prelude::*;

        fn arb_tree() -> impl Strategy<Value = ExprTree> {
            let leaf = prop_oneof![
                (-9i64..=9).prop_map(ExprTree::integer),
                (1i64..=9, 1i64..=9).prop_map(|(n, d)| ExprTree::ratio(n, d)),
                (0u32..=3, 0u32..=2, 0u32..=2).prop_map(|(a, b, c)| {
                    ExprTree::Jet(JetVar::new(0, MultiIndex::new(vec![a, b, c])))
                }),
                Just(ExprTree::Sin(0)),
                Just(ExprTree::Cos(0)),
            ];
            leaf.prop_recursive(3, 20, 3, |inner| {
                prop_oneof![
                    (inner.clone(), inner.clone())
                        .prop_map(|(a, b)| ExprTree::Add(Box::new(a), Box::new(b))),
                    (inner.clone(), inner.clone())
                        .prop_map(|(a, b)| ExprTree::Mul(Box::new(a), Box::new(b))),
                    (inner.clone(), 0i64..=3)
                        .prop_map(|(a, e)| ExprTree::Pow(Box::new(a), e)),
                    inner.prop_map(|a| ExprTree::Neg(Box::new(a))),
                ]
            })
        }

        proptest! {
            #[test]
            fn print_parse_round_trip(t in arb_tree()) {
                let ctx = ctx3();
                let e = normalize(&ctx, &t).unwrap();
                let printed = e.to_string();
                let reparsed = parse_expr(&printed, &ctx).unwrap();
                prop_assert_eq!(e, reparsed);
            }
        }
    }
}
