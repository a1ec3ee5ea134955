//! Exact evaluation of level expressions such as `alpha/3` or `0.025 * 2/3`.
//!
//! Grammar: sums and differences of products and quotients of decimal
//! literals, `alpha` (or `α`), unary signs and parentheses. Everything is
//! computed over big rationals and rounded to `f64` once at the end.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("unexpected character {found:?} at offset {offset}")]
    Unexpected { found: char, offset: usize },
    #[error("unexpected end of expression")]
    UnexpectedEnd,
    #[error("malformed number {0:?}")]
    BadNumber(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("`alpha` is not available here")]
    NoAlpha,
    #[error("value does not fit in a double")]
    Overflow,
}

/// Evaluates `source` exactly. `alpha` is the value bound to `alpha`/`α`,
/// or `None` where the name may not be used.
pub fn evaluate(source: &str, alpha: Option<&BigRational>) -> Result<BigRational, ExprError> {
    let mut p = Parser {
        chars: source.char_indices().collect(),
        pos: 0,
        alpha,
    };
    let value = p.sum()?;
    p.skip_ws();
    match p.peek() {
        None => Ok(value),
        Some((offset, found)) => Err(ExprError::Unexpected { found, offset }),
    }
}

pub fn to_f64(value: &BigRational) -> Result<f64, ExprError> {
    value
        .to_f64()
        .filter(|v| v.is_finite())
        .ok_or(ExprError::Overflow)
}

struct Parser<'a> {
    chars: Vec<(usize, char)>,
    pos: usize,
    alpha: Option<&'a BigRational>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<(usize, char)> {
        self.chars.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(|(_, c)| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn next_op(&mut self, ops: &[char]) -> Option<char> {
        self.skip_ws();
        let (_, c) = self.peek()?;
        if ops.contains(&c) {
            self.pos += 1;
            Some(c)
        } else {
            None
        }
    }

    fn sum(&mut self) -> Result<BigRational, ExprError> {
        let mut acc = self.product()?;
        while let Some(op) = self.next_op(&['+', '-']) {
            let rhs = self.product()?;
            acc = if op == '+' { acc + rhs } else { acc - rhs };
        }
        Ok(acc)
    }

    fn product(&mut self) -> Result<BigRational, ExprError> {
        let mut acc = self.unary()?;
        while let Some(op) = self.next_op(&['*', '/']) {
            let rhs = self.unary()?;
            if op == '*' {
                acc *= rhs;
            } else if rhs.is_zero() {
                return Err(ExprError::DivisionByZero);
            } else {
                acc /= rhs;
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<BigRational, ExprError> {
        match self.next_op(&['-', '+']) {
            Some('-') => Ok(-self.unary()?),
            Some(_) => self.unary(),
            None => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<BigRational, ExprError> {
        self.skip_ws();
        let (offset, c) = self.peek().ok_or(ExprError::UnexpectedEnd)?;
        if c == '(' {
            self.pos += 1;
            let inner = self.sum()?;
            self.skip_ws();
            return match self.peek() {
                Some((_, ')')) => {
                    self.pos += 1;
                    Ok(inner)
                }
                Some((offset, found)) => Err(ExprError::Unexpected { found, offset }),
                None => Err(ExprError::UnexpectedEnd),
            };
        }
        if c.is_ascii_digit() || c == '.' {
            return self.number();
        }
        if c.is_alphabetic() {
            let start = self.pos;
            while self
                .peek()
                .is_some_and(|(_, c)| c.is_alphanumeric() || c == '_')
            {
                self.pos += 1;
            }
            let word: String = self.chars[start..self.pos]
                .iter()
                .map(|&(_, c)| c)
                .collect();
            return match word.as_str() {
                "alpha" | "α" => self.alpha.cloned().ok_or(ExprError::NoAlpha),
                _ => Err(ExprError::Unexpected { found: c, offset }),
            };
        }
        Err(ExprError::Unexpected { found: c, offset })
    }

    fn number(&mut self) -> Result<BigRational, ExprError> {
        let start = self.pos;
        let mut text = String::new();
        while let Some((_, c)) = self.peek() {
            let exponent_sign = (c == '-' || c == '+') && text.ends_with(['e', 'E']);
            if c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E' || exponent_sign {
                text.push(c);
                self.pos += 1;
            } else {
                break;
            }
        }
        parse_decimal(&text).ok_or_else(|| {
            self.pos = start;
            ExprError::BadNumber(text)
        })
    }
}

/// `12.5e-3` as the exact rational 125/10000.
fn parse_decimal(text: &str) -> Option<BigRational> {
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(i) => (&text[..i], text[i + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (whole, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if whole.is_empty() && frac.is_empty() {
        return None;
    }
    if !whole
        .chars()
        .chain(frac.chars())
        .all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let digits = BigInt::parse_bytes(format!("{whole}{frac}").as_bytes(), 10)?;
    let scale = exponent - i32::try_from(frac.len()).ok()?;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        BigRational::from_integer(digits * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(digits, num_traits::pow(ten, scale.unsigned_abs() as usize))
    };
    Some(value)
}
