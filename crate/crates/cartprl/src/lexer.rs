//! Tokens of the concrete syntax.

use std::fmt;

use crate::parser::ParseError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    /// Identifiers, keywords and rule names (`bool/intro/true`).
    Ident(String),
    Num(u32),
    Str(String),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Num(n) => write!(f, "`{n}`"),
            Tok::Str(s) => write!(f, "{s:?}"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

/// A 1-based line and column.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

// longest first
const SYMBOLS: &[&str] = &[
    "->", "=>", "(", ")", "[", "]", "{", "}", "<", ">", ",", ";", ":", ".", "\\", "|", "=", "*", "@", "?",
];

fn ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\'' || c == '/'
}

pub fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut k, mut line, mut col) = (0, 1, 1);
    let advance = |k: &mut usize, line: &mut usize, col: &mut usize, n: usize| {
        for _ in 0..n {
            if chars[*k] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *k += 1;
        }
    };
    while k < chars.len() {
        let c = chars[k];
        let pos = Pos { line, col };
        if c.is_whitespace() {
            advance(&mut k, &mut line, &mut col, 1);
            continue;
        }
        if c == '-' && chars.get(k + 1) == Some(&'-') {
            while k < chars.len() && chars[k] != '\n' {
                advance(&mut k, &mut line, &mut col, 1);
            }
            continue;
        }
        if ident_start(c) {
            let start = k;
            let mut end = k;
            while end < chars.len() && ident_char(chars[end]) {
                end += 1;
            }
            let mut word: String = chars[start..end].iter().collect();
            if word == "S1" && chars[end..].starts_with(&['-', 'r', 'e', 'c']) && !chars.get(end + 4).is_some_and(|&c| ident_char(c)) {
                word.push_str("-rec");
                end += 4;
            }
            advance(&mut k, &mut line, &mut col, end - start);
            out.push((Tok::Ident(word), pos));
            continue;
        }
        if c.is_ascii_digit() {
            let start = k;
            while k < chars.len() && chars[k].is_ascii_digit() {
                advance(&mut k, &mut line, &mut col, 1);
            }
            let text: String = chars[start..k].iter().collect();
            let n = text
                .parse()
                .map_err(|_| ParseError::new(pos, "a number that fits in 32 bits"))?;
            out.push((Tok::Num(n), pos));
            continue;
        }
        if c == '"' {
            advance(&mut k, &mut line, &mut col, 1);
            let mut s = String::new();
            loop {
                let Some(&c) = chars.get(k) else {
                    return Err(ParseError::new(pos, "a closing `\"`"));
                };
                advance(&mut k, &mut line, &mut col, 1);
                match c {
                    '"' => break,
                    '\\' => {
                        let Some(&e) = chars.get(k) else {
                            return Err(ParseError::new(pos, "a closing `\"`"));
                        };
                        advance(&mut k, &mut line, &mut col, 1);
                        if e == 'u' && chars.get(k) == Some(&'{') {
                            let close = chars[k..].iter().position(|&c| c == '}').map(|n| k + n);
                            let hex: Option<String> = close.map(|end| chars[k + 1..end].iter().collect());
                            let c = hex.and_then(|h| u32::from_str_radix(&h, 16).ok()).and_then(char::from_u32);
                            let (Some(c), Some(end)) = (c, close) else {
                                return Err(ParseError::new(pos, "a valid `\\u{..}` escape"));
                            };
                            let n = end + 1 - k;
                            advance(&mut k, &mut line, &mut col, n);
                            s.push(c);
                            continue;
                        }
                        s.push(match e {
                            'n' => '\n',
                            't' => '\t',
                            'r' => '\r',
                            '0' => '\0',
                            other => other,
                        });
                    }
                    c => s.push(c),
                }
            }
            out.push((Tok::Str(s), pos));
            continue;
        }
        let rest: String = chars[k..chars.len().min(k + 2)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                advance(&mut k, &mut line, &mut col, s.len());
                out.push((Tok::Sym(s), pos));
            }
            None => return Err(ParseError::new(pos, format!("a token, found `{c}`"))),
        }
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}
