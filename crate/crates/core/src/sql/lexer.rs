use super::{ParseError, ParseErrorKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokKind {
    Ident,
    QuotedIdent,
    Number,
    Str,
    Op,
    LParen,
    RParen,
    Comma,
    Dot,
    Semi,
    Star,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token {
    pub kind: TokKind,
    pub start: usize,
    pub end: usize,
}

impl Token {
    pub fn text<'a>(&self, src: &'a str) -> &'a str {
        &src[self.start..self.end]
    }

    /// Bare identifier equal (case-insensitively) to `kw`.
    pub fn is_word(&self, src: &str, kw: &str) -> bool {
        self.kind == TokKind::Ident && self.text(src).eq_ignore_ascii_case(kw)
    }

    /// Identifier name without quoting.
    pub fn ident_name(&self, src: &str) -> String {
        let t = self.text(src);
        match self.kind {
            TokKind::QuotedIdent => {
                let inner = &t[1..t.len() - 1];
                if t.starts_with('"') {
                    inner.replace("\"\"", "\"")
                } else {
                    inner.to_owned()
                }
            }
            _ => t.to_owned(),
        }
    }
}

fn err(kind: ParseErrorKind, position: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        kind,
        position,
        message: message.into(),
    }
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let push = |tokens: &mut Vec<Token>, kind, end| tokens.push(Token { kind, start, end });
        match c {
            b' ' | b'\t' | b'\n' | b'\r' | 0x0c => i += 1,
            b'-' if bytes.get(i + 1) == Some(&b'-') => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'/' if bytes.get(i + 1) == Some(&b'*') => match src[i + 2..].find("*/") {
                Some(off) => i = i + 2 + off + 2,
                None => return Err(err(ParseErrorKind::Syntax, start, "unterminated comment")),
            },
            b'\'' => {
                i += 1;
                loop {
                    match bytes.get(i) {
                        None => {
                            return Err(err(
                                ParseErrorKind::Syntax,
                                start,
                                "unterminated string literal",
                            ))
                        }
                        Some(b'\'') if bytes.get(i + 1) == Some(&b'\'') => i += 2,
                        Some(b'\'') => {
                            i += 1;
                            break;
                        }
                        Some(_) => i += 1,
                    }
                }
                push(&mut tokens, TokKind::Str, i);
            }
            b'"' | b'`' | b'[' => {
                let close = match c {
                    b'[' => b']',
                    other => other,
                };
                i += 1;
                loop {
                    match bytes.get(i) {
                        None => {
                            return Err(err(
                                ParseErrorKind::Syntax,
                                start,
                                "unterminated quoted identifier",
                            ))
                        }
                        Some(&b)
                            if b == close && close == b'"' && bytes.get(i + 1) == Some(&b'"') =>
                        {
                            i += 2
                        }
                        Some(&b) if b == close => {
                            i += 1;
                            break;
                        }
                        Some(_) => i += 1,
                    }
                }
                push(&mut tokens, TokKind::QuotedIdent, i);
            }
            b'0'..=b'9' => {
                i = scan_number(bytes, i);
                push(&mut tokens, TokKind::Number, i);
            }
            b'.' if bytes.get(i + 1).is_some_and(u8::is_ascii_digit) => {
                i = scan_number(bytes, i);
                push(&mut tokens, TokKind::Number, i);
            }
            b'(' => {
                i += 1;
                push(&mut tokens, TokKind::LParen, i);
            }
            b')' => {
                i += 1;
                push(&mut tokens, TokKind::RParen, i);
            }
            b',' => {
                i += 1;
                push(&mut tokens, TokKind::Comma, i);
            }
            b'.' => {
                i += 1;
                push(&mut tokens, TokKind::Dot, i);
            }
            b';' => {
                i += 1;
                push(&mut tokens, TokKind::Semi, i);
            }
            b'*' => {
                i += 1;
                push(&mut tokens, TokKind::Star, i);
            }
            b'<' | b'>' | b'!' | b'=' | b'|' => {
                let two = bytes.get(i + 1).copied();
                let len = match (c, two) {
                    (b'<', Some(b'=' | b'>' | b'<')) | (b'>', Some(b'=' | b'>')) => 2,
                    (b'!', Some(b'=')) | (b'=', Some(b'=')) | (b'|', Some(b'|')) => 2,
                    (b'!', _) => return Err(err(ParseErrorKind::Syntax, start, "unexpected '!'")),
                    _ => 1,
                };
                i += len;
                push(&mut tokens, TokKind::Op, i);
            }
            b'+' | b'-' | b'/' | b'%' | b'&' | b'~' | b'?' => {
                i += 1;
                push(&mut tokens, TokKind::Op, i);
            }
            _ => {
                let ch = src[i..]
                    .chars()
                    .next()
                    .expect("index is on a char boundary");
                if ch.is_alphabetic() || ch == '_' {
                    i += ch.len_utf8();
                    while let Some(next) = src[i..].chars().next() {
                        if next.is_alphanumeric() || next == '_' || next == '$' {
                            i += next.len_utf8();
                        } else {
                            break;
                        }
                    }
                    push(&mut tokens, TokKind::Ident, i);
                } else {
                    return Err(err(
                        ParseErrorKind::Syntax,
                        start,
                        format!("unexpected character {ch:?}"),
                    ));
                }
            }
        }
    }
    Ok(tokens)
}

fn scan_number(bytes: &[u8], mut i: usize) -> usize {
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    if bytes.get(i) == Some(&b'.') {
        i += 1;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
    }
    if matches!(bytes.get(i), Some(b'e' | b'E')) {
        let mut j = i + 1;
        if matches!(bytes.get(j), Some(b'+' | b'-')) {
            j += 1;
        }
        if bytes.get(j).is_some_and(u8::is_ascii_digit) {
            i = j;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
        }
    }
    i
}

/// Re-joins the tokens of `src` with single spaces wherever the original had
/// whitespace or comments.
pub fn normalize_ws(src: &str) -> Result<String, ParseError> {
    let tokens = tokenize(src)?;
    let mut out = String::with_capacity(src.len());
    let mut prev_end = None;
    for t in tokens {
        if let Some(end) = prev_end {
            if t.start > end {
                out.push(' ');
            }
        }
        out.push_str(t.text(src));
        prev_end = Some(t.end);
    }
    Ok(out)
}
