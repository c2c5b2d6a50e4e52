use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    /// Bare identifier or keyword; keywords are recognized by the parser.
    Ident(String),
    /// Backtick-quoted identifier, never a keyword.
    Quoted(String),
    Str(String),
    Int(i64),
    Float(f64),
    Param(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Colon,
    Comma,
    Dot,
    Minus,
    Lt,
    Gt,
    Le,
    Ge,
    Eq,
    Ne,
    Star,
    Pipe,
    Plus,
    Slash,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Quoted(s) => format!("`{s}`"),
            Tok::Str(s) => format!("string \"{s}\""),
            Tok::Int(i) => format!("integer {i}"),
            Tok::Float(f) => format!("float {f}"),
            Tok::Param(p) => format!("parameter ${p}"),
            Tok::Eof => "end of input".into(),
            other => format!("`{}`", other.symbol()),
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Colon => ":",
            Tok::Comma => ",",
            Tok::Dot => ".",
            Tok::Minus => "-",
            Tok::Lt => "<",
            Tok::Gt => ">",
            Tok::Le => "<=",
            Tok::Ge => ">=",
            Tok::Eq => "=",
            Tok::Ne => "<>",
            Tok::Star => "*",
            Tok::Pipe => "|",
            Tok::Plus => "+",
            Tok::Slash => "/",
            _ => "?",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub tok: Tok,
    pub start: usize,
    pub end: usize,
}

fn err(position: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        position,
        message: message.into(),
        found: None,
        expected: None,
    }
}

/// Splits query text into tokens with byte spans. Ends with `Tok::Eof`.
pub(crate) fn tokenize(input: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = input.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let single = |t: Tok| Some((t, 1));
        let two = |t: Tok| Some((t, 2));
        let next = bytes.get(i + 1).copied();
        let punct = match c {
            b'(' => single(Tok::LParen),
            b')' => single(Tok::RParen),
            b'[' => single(Tok::LBracket),
            b']' => single(Tok::RBracket),
            b'{' => single(Tok::LBrace),
            b'}' => single(Tok::RBrace),
            b':' => single(Tok::Colon),
            b',' => single(Tok::Comma),
            b'-' => single(Tok::Minus),
            b'*' => single(Tok::Star),
            b'|' => single(Tok::Pipe),
            b'+' => single(Tok::Plus),
            b'/' => single(Tok::Slash),
            b'=' => single(Tok::Eq),
            b'<' => match next {
                Some(b'=') => two(Tok::Le),
                Some(b'>') => two(Tok::Ne),
                _ => single(Tok::Lt),
            },
            b'>' => match next {
                Some(b'=') => two(Tok::Ge),
                _ => single(Tok::Gt),
            },
            b'!' if next == Some(b'=') => two(Tok::Ne),
            b'.' if !next.is_some_and(|n| n.is_ascii_digit()) => single(Tok::Dot),
            _ => None,
        };
        if let Some((tok, len)) = punct {
            out.push(Token {
                tok,
                start,
                end: start + len,
            });
            i += len;
            continue;
        }
        match c {
            b'"' | b'\'' => {
                let (s, end) = lex_string(input, i)?;
                out.push(Token {
                    tok: Tok::Str(s),
                    start,
                    end,
                });
                i = end;
            }
            b'`' => {
                let mut s = String::new();
                let mut j = i + 1;
                loop {
                    match input[j..].chars().next() {
                        None => return Err(err(start, "unterminated quoted identifier")),
                        Some('`') if bytes.get(j + 1) == Some(&b'`') => {
                            s.push('`');
                            j += 2;
                        }
                        Some('`') => {
                            j += 1;
                            break;
                        }
                        Some(ch) => {
                            s.push(ch);
                            j += ch.len_utf8();
                        }
                    }
                }
                out.push(Token {
                    tok: Tok::Quoted(s),
                    start,
                    end: j,
                });
                i = j;
            }
            b'$' => {
                let mut j = i + 1;
                while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
                    j += 1;
                }
                out.push(Token {
                    tok: Tok::Param(input[i + 1..j].to_string()),
                    start,
                    end: j,
                });
                i = j;
            }
            b'0'..=b'9' | b'.' => {
                let (tok, end) = lex_number(input, i)?;
                out.push(Token { tok, start, end });
                i = end;
            }
            _ if c.is_ascii_alphabetic() || c == b'_' || c >= 0x80 => {
                let mut j = i;
                while j < bytes.len() {
                    let ch = input[j..].chars().next().unwrap();
                    if ch.is_alphanumeric() || ch == '_' {
                        j += ch.len_utf8();
                    } else {
                        break;
                    }
                }
                if j == i {
                    let ch = input[i..].chars().next().unwrap();
                    return Err(err(i, format!("unexpected character `{ch}`")));
                }
                out.push(Token {
                    tok: Tok::Ident(input[i..j].to_string()),
                    start,
                    end: j,
                });
                i = j;
            }
            _ => {
                let ch = input[i..].chars().next().unwrap();
                return Err(err(i, format!("unexpected character `{ch}`")));
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        start: input.len(),
        end: input.len(),
    });
    Ok(out)
}

fn lex_string(input: &str, start: usize) -> Result<(String, usize), ParseError> {
    let quote = input.as_bytes()[start] as char;
    let mut s = String::new();
    let mut chars = input[start + 1..].char_indices();
    while let Some((off, ch)) = chars.next() {
        match ch {
            '\\' => {
                let (_, esc) = chars
                    .next()
                    .ok_or_else(|| err(start, "unterminated string literal"))?;
                s.push(match esc {
                    'n' => '\n',
                    't' => '\t',
                    'r' => '\r',
                    other => other,
                });
            }
            c if c == quote => return Ok((s, start + 1 + off + 1)),
            c => s.push(c),
        }
    }
    Err(err(start, "unterminated string literal"))
}

fn lex_number(input: &str, start: usize) -> Result<(Tok, usize), ParseError> {
    let bytes = input.as_bytes();
    let mut j = start;
    let mut is_float = false;
    while j < bytes.len() && bytes[j].is_ascii_digit() {
        j += 1;
    }
    if j < bytes.len() && bytes[j] == b'.' && bytes.get(j + 1).is_some_and(|b| b.is_ascii_digit()) {
        is_float = true;
        j += 1;
        while j < bytes.len() && bytes[j].is_ascii_digit() {
            j += 1;
        }
    }
    if j < bytes.len() && (bytes[j] == b'e' || bytes[j] == b'E') {
        let mut k = j + 1;
        if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
            k += 1;
        }
        if k < bytes.len() && bytes[k].is_ascii_digit() {
            is_float = true;
            j = k;
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                j += 1;
            }
        }
    }
    let text = &input[start..j];
    if is_float {
        text.parse::<f64>()
            .map(|f| (Tok::Float(f), j))
            .map_err(|_| err(start, format!("invalid number `{text}`")))
    } else {
        text.parse::<i64>()
            .map(|v| (Tok::Int(v), j))
            .map_err(|_| err(start, format!("integer out of range `{text}`")))
    }
}
