use super::ScriptError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Num(String),
    Str(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Semi,
    Comma,
    Dot,
    Colon,
    Lt,
    Plus,
    Minus,
    Eq,
    PlusPlus,
    Function,
    Var,
    For,
    Return,
    This,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub offset: usize,
}

/// Lex the script subset. No comment syntax exists in the subset, so a
/// `/` is simply an unknown character.
pub fn tokenize(src: &str) -> Result<Vec<Token>, ScriptError> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let start = i;
        let b = bytes[i];
        let tok = match b {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'(' => single(&mut i, Tok::LParen),
            b')' => single(&mut i, Tok::RParen),
            b'{' => single(&mut i, Tok::LBrace),
            b'}' => single(&mut i, Tok::RBrace),
            b'[' => single(&mut i, Tok::LBracket),
            b']' => single(&mut i, Tok::RBracket),
            b';' => single(&mut i, Tok::Semi),
            b',' => single(&mut i, Tok::Comma),
            b'.' => single(&mut i, Tok::Dot),
            b':' => single(&mut i, Tok::Colon),
            b'<' => single(&mut i, Tok::Lt),
            b'-' => single(&mut i, Tok::Minus),
            b'=' => single(&mut i, Tok::Eq),
            b'+' => {
                if bytes.get(i + 1) == Some(&b'+') {
                    i += 2;
                    Tok::PlusPlus
                } else {
                    i += 1;
                    Tok::Plus
                }
            }
            b'\'' | b'"' => {
                i += 1;
                let mut out = Vec::new();
                loop {
                    match bytes.get(i) {
                        Some(&c) if c == b => {
                            i += 1;
                            break;
                        }
                        Some(b'\\') => {
                            // Only the quote itself and the backslash
                            // escape; everything else stays literal.
                            match bytes.get(i + 1) {
                                Some(&c) if c == b || c == b'\\' => {
                                    out.push(c);
                                    i += 2;
                                }
                                _ => {
                                    out.push(b'\\');
                                    i += 1;
                                }
                            }
                        }
                        Some(&c) => {
                            out.push(c);
                            i += 1;
                        }
                        None => {
                            return Err(ScriptError::Lex {
                                offset: start,
                                message: "unterminated string literal".into(),
                            });
                        }
                    }
                }
                Tok::Str(String::from_utf8_lossy(&out).into_owned())
            }
            b'0'..=b'9' => {
                while matches!(bytes.get(i), Some(b'0'..=b'9')) {
                    i += 1;
                }
                if bytes.get(i) == Some(&b'.') && matches!(bytes.get(i + 1), Some(b'0'..=b'9')) {
                    i += 1;
                    while matches!(bytes.get(i), Some(b'0'..=b'9')) {
                        i += 1;
                    }
                }
                Tok::Num(src[start..i].to_string())
            }
            c if c == b'_' || c == b'$' || c.is_ascii_alphabetic() => {
                while matches!(bytes.get(i), Some(&c) if c == b'_' || c == b'$' || c.is_ascii_alphanumeric())
                {
                    i += 1;
                }
                match &src[start..i] {
                    "function" => Tok::Function,
                    "var" => Tok::Var,
                    "for" => Tok::For,
                    "return" => Tok::Return,
                    "this" => Tok::This,
                    ident => Tok::Ident(ident.to_string()),
                }
            }
            c => {
                return Err(ScriptError::Lex {
                    offset: start,
                    message: format!("unknown character '{}'", c as char),
                });
            }
        };
        toks.push(Token { tok, offset: start });
    }
    Ok(toks)
}

fn single(i: &mut usize, tok: Tok) -> Tok {
    *i += 1;
    tok
}
