//! Sums of products of names, with `^n` powers, `( )` grouping and `{ }`
//! for an Ext class standing in for the element it detects.

use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Atom {
    Name(String),
    Group(Expr),
    Class(Expr),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factor {
    pub atom: Atom,
    pub power: u32,
}

/// A product of factors; the empty product is 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Term(pub Vec<Factor>);

/// A sum of terms; the empty sum is 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expr(pub Vec<Term>);

impl Expr {
    pub fn zero() -> Self {
        Expr(Vec::new())
    }

    pub fn name(n: &str) -> Self {
        Expr(vec![Term(vec![Factor { atom: Atom::Name(n.to_string()), power: 1 }])])
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn parse(text: &str) -> Result<Expr, String> {
        if text.trim() == "0" {
            return Ok(Expr::zero());
        }
        let mut p = Parser { s: text.as_bytes(), i: 0, text };
        let e = p.expr()?;
        if p.i != p.s.len() {
            return Err(format!("unexpected `{}` in `{text}`", &text[p.i..]));
        }
        Ok(e)
    }
}

struct Parser<'a> {
    s: &'a [u8],
    i: usize,
    text: &'a str,
}

impl Parser<'_> {
    fn peek(&self) -> Option<u8> {
        self.s.get(self.i).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        let hit = self.peek() == Some(c);
        self.i += usize::from(hit);
        hit
    }

    fn expr(&mut self) -> Result<Expr, String> {
        let mut terms = vec![self.term()?];
        while self.eat(b'+') {
            terms.push(self.term()?);
        }
        Ok(Expr(terms))
    }

    fn term(&mut self) -> Result<Term, String> {
        let mut factors = vec![self.factor()?];
        while self.eat(b'*') {
            factors.push(self.factor()?);
        }
        Ok(Term(factors))
    }

    fn factor(&mut self) -> Result<Factor, String> {
        let atom = self.atom()?;
        let mut power = 1;
        if self.eat(b'^') {
            let start = self.i;
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.i += 1;
            }
            power = self.text[start..self.i]
                .parse()
                .map_err(|_| format!("expected an exponent after `^` in `{}`", self.text))?;
            if power == 0 {
                return Err(format!("zero exponent in `{}`", self.text));
            }
        }
        Ok(Factor { atom, power })
    }

    fn atom(&mut self) -> Result<Atom, String> {
        for (open, close, class) in [(b'(', b')', false), (b'{', b'}', true)] {
            if self.eat(open) {
                let inner = self.expr()?;
                if !self.eat(close) {
                    return Err(format!("unclosed `{}` in `{}`", open as char, self.text));
                }
                return Ok(if class { Atom::Class(inner) } else { Atom::Group(inner) });
            }
        }
        let start = self.i;
        while self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == b'~' || c == b'_') {
            self.i += 1;
        }
        if start == self.i {
            return Err(match self.peek() {
                Some(c) => format!("unexpected `{}` in `{}`", c as char, self.text),
                None => format!("`{}` ends early", self.text),
            });
        }
        Ok(Atom::Name(self.text[start..self.i].to_string()))
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.atom {
            Atom::Name(n) => f.write_str(n)?,
            Atom::Group(g) => write!(f, "({g})")?,
            Atom::Class(c) => write!(f, "{{{c}}}")?,
        }
        if self.power != 1 {
            write!(f, "^{}", self.power)?;
        }
        Ok(())
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("*")?;
            }
            write!(f, "{x}")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("0");
        }
        for (i, t) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("+")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}
