use std::fmt;

use thiserror::Error;

/// Regular path query over edge tags.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Regex {
    Epsilon,
    /// `_`: any single tag.
    Wildcard,
    Symbol(String),
    Concat(Box<Regex>, Box<Regex>),
    Alt(Box<Regex>, Box<Regex>),
    Star(Box<Regex>),
    Plus(Box<Regex>),
}

impl Regex {
    pub fn sym(name: &str) -> Regex {
        Regex::Symbol(name.to_string())
    }

    pub fn concat(a: Regex, b: Regex) -> Regex {
        Regex::Concat(Box::new(a), Box::new(b))
    }

    pub fn alt(a: Regex, b: Regex) -> Regex {
        Regex::Alt(Box::new(a), Box::new(b))
    }

    pub fn star(a: Regex) -> Regex {
        Regex::Star(Box::new(a))
    }

    pub fn plus(a: Regex) -> Regex {
        Regex::Plus(Box::new(a))
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        match self {
            Regex::Epsilon | Regex::Wildcard | Regex::Symbol(_) => 1,
            Regex::Concat(a, b) | Regex::Alt(a, b) => 1 + a.size() + b.size(),
            Regex::Star(a) | Regex::Plus(a) => 1 + a.size(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Regex::Epsilon | Regex::Wildcard | Regex::Symbol(_) => 1,
            Regex::Concat(a, b) | Regex::Alt(a, b) => 1 + a.depth().max(b.depth()),
            Regex::Star(a) | Regex::Plus(a) => 1 + a.depth(),
        }
    }

    /// Every tag named by a `Symbol` leaf, in first-occurrence order.
    pub fn symbols(&self) -> Vec<&str> {
        fn walk<'a>(r: &'a Regex, out: &mut Vec<&'a str>) {
            match r {
                Regex::Symbol(s) => {
                    if !out.contains(&s.as_str()) {
                        out.push(s);
                    }
                }
                Regex::Epsilon | Regex::Wildcard => {}
                Regex::Concat(a, b) | Regex::Alt(a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
                Regex::Star(a) | Regex::Plus(a) => walk(a, out),
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    fn precedence(&self) -> u8 {
        match self {
            Regex::Alt(..) => 0,
            Regex::Concat(..) => 1,
            Regex::Star(_) | Regex::Plus(_) => 2,
            _ => 3,
        }
    }
}

impl fmt::Display for Regex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wrap = |f: &mut fmt::Formatter<'_>, r: &Regex, min: u8| {
            if r.precedence() < min {
                write!(f, "({r})")
            } else {
                write!(f, "{r}")
            }
        };
        match self {
            Regex::Epsilon => write!(f, "eps"),
            Regex::Wildcard => write!(f, "_"),
            Regex::Symbol(s) => write!(f, "{s}"),
            Regex::Concat(a, b) => {
                wrap(f, a, 1)?;
                write!(f, ".")?;
                wrap(f, b, 2)
            }
            Regex::Alt(a, b) => {
                wrap(f, a, 0)?;
                write!(f, "|")?;
                wrap(f, b, 1)
            }
            Regex::Star(a) => {
                wrap(f, a, 3)?;
                write!(f, "*")
            }
            Regex::Plus(a) => {
                wrap(f, a, 3)?;
                write!(f, "+")
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("syntax error at column {pos}: {message}")]
pub struct RegexError {
    /// 1-based character column.
    pub pos: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Eps,
    Wild,
    Dot,
    Bar,
    Star,
    Plus,
    LParen,
    RParen,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, RegexError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let pos = i + 1;
        let tok = match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '.' => Tok::Dot,
            '|' => Tok::Bar,
            '*' => Tok::Star,
            '+' => Tok::Plus,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '_' => Tok::Wild,
            c if c.is_ascii_alphabetic() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                out.push((pos, if word == "eps" { Tok::Eps } else { Tok::Ident(word) }));
                continue;
            }
            other => {
                return Err(RegexError {
                    pos,
                    message: format!("unexpected character `{other}`"),
                })
            }
        };
        out.push((pos, tok));
        i += 1;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn fail<T>(&self, message: &str) -> Result<T, RegexError> {
        Err(RegexError {
            pos: self.pos(),
            message: message.to_string(),
        })
    }

    fn expr(&mut self) -> Result<Regex, RegexError> {
        let mut left = self.term()?;
        while self.peek() == Some(&Tok::Bar) {
            self.at += 1;
            let right = self.term()?;
            left = Regex::alt(left, right);
        }
        Ok(left)
    }

    fn term(&mut self) -> Result<Regex, RegexError> {
        let mut left = self.factor()?;
        while self.peek() == Some(&Tok::Dot) {
            self.at += 1;
            let right = self.factor()?;
            left = Regex::concat(left, right);
        }
        Ok(left)
    }

    fn factor(&mut self) -> Result<Regex, RegexError> {
        let base = self.base()?;
        Ok(match self.peek() {
            Some(Tok::Star) => {
                self.at += 1;
                Regex::star(base)
            }
            Some(Tok::Plus) => {
                self.at += 1;
                Regex::plus(base)
            }
            _ => base,
        })
    }

    fn base(&mut self) -> Result<Regex, RegexError> {
        let tok = match self.peek() {
            Some(t) => t.clone(),
            None => return self.fail("unexpected end of query"),
        };
        self.at += 1;
        match tok {
            Tok::Ident(s) => Ok(Regex::Symbol(s)),
            Tok::Eps => Ok(Regex::Epsilon),
            Tok::Wild => Ok(Regex::Wildcard),
            Tok::LParen => {
                let inner = self.expr()?;
                if self.peek() != Some(&Tok::RParen) {
                    return self.fail("expected `)`");
                }
                self.at += 1;
                Ok(inner)
            }
            _ => {
                self.at -= 1;
                self.fail("expected a tag, `_`, `eps` or `(`")
            }
        }
    }
}

/// Parses the query syntax: `|` alternation, `.` concatenation, postfix `*`
/// and `+`, `_` wildcard, `eps` for the empty word, and parentheses.
pub fn parse_regex(text: &str) -> Result<Regex, RegexError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        at: 0,
        end: text.chars().count() + 1,
    };
    let r = p.expr()?;
    if p.at != p.toks.len() {
        return p.fail("unexpected trailing input");
    }
    Ok(r)
}

/// Recognizes `_*.a1._*.a2 ... ak._*` (k = 0 is plain `_*`) and returns the
/// symbol chain.
pub fn match_ifq(r: &Regex) -> Option<Vec<String>> {
    fn flatten<'a>(r: &'a Regex, out: &mut Vec<&'a Regex>) {
        match r {
            Regex::Concat(a, b) => {
                flatten(a, out);
                flatten(b, out);
            }
            other => out.push(other),
        }
    }
    let mut parts = Vec::new();
    flatten(r, &mut parts);
    let is_any = |r: &Regex| matches!(r, Regex::Star(inner) if **inner == Regex::Wildcard);
    if parts.len() % 2 == 0 {
        return None;
    }
    let mut syms = Vec::new();
    for (n, part) in parts.iter().enumerate() {
        if n % 2 == 0 {
            if !is_any(part) {
                return None;
            }
        } else {
            match part {
                Regex::Symbol(s) => syms.push(s.clone()),
                _ => return None,
            }
        }
    }
    Some(syms)
}

/// Builds `_*.a1._* ... ak._*`.
pub fn ifq(symbols: &[&str]) -> Regex {
    let any = || Regex::star(Regex::Wildcard);
    let mut r = any();
    for s in symbols {
        r = Regex::concat(Regex::concat(r, Regex::sym(s)), any());
    }
    r
}
