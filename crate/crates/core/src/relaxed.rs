//! Shell-style query text parsing: unquoted `$`-prefixed keys, single or
//! double quoted strings, bare numbers and literals. Strict JSON is a
//! sublanguage, so everything the canonical serializer emits parses back.
//!
//! Also home to the deliberately broken string-concatenation query
//! builder that the concat login endpoint uses.

use crate::value::Value;
use indexmap::IndexMap;

/// Parse failure with the byte offset where parsing stopped.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("parse error at byte {offset}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

/// Parse one relaxed value; trailing non-whitespace is an error.
pub fn parse_relaxed(source: &str) -> Result<Value, ParseError> {
    let mut p = Parser { src: source.as_bytes(), pos: 0 };
    p.skip_ws();
    let value = p.parse_value()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.err("trailing characters after value"));
    }
    Ok(value)
}

/// The flawed builder: embeds raw request fields between single quotes
/// with no escaping whatsoever.
pub fn build_concat_login_query(username_raw: &str, password_raw: &str) -> String {
    format!("{{ username: '{username_raw}', password: '{password_raw}' }}")
}

struct Parser<'s> {
    src: &'s [u8],
    pos: usize,
}

impl<'s> Parser<'s> {
    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError { offset: self.pos.min(self.src.len()), message: message.into() }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek()?;
        self.pos += 1;
        Some(b)
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\n' | b'\r')) {
            self.pos += 1;
        }
    }

    fn expect(&mut self, b: u8) -> Result<(), ParseError> {
        if self.peek() == Some(b) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected '{}'", b as char)))
        }
    }

    fn parse_value(&mut self) -> Result<Value, ParseError> {
        match self.peek() {
            Some(b'{') => self.parse_object(),
            Some(b'[') => self.parse_array(),
            Some(b'\'') => Ok(Value::Text(self.parse_single_quoted()?)),
            Some(b'"') => Ok(Value::Text(self.parse_double_quoted()?)),
            Some(b'-' | b'0'..=b'9') => self.parse_number(),
            Some(c) if c.is_ascii_alphabetic() => self.parse_word(),
            Some(c) => Err(self.err(format!("unexpected character '{}'", c as char))),
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn parse_object(&mut self) -> Result<Value, ParseError> {
        self.expect(b'{')?;
        let mut map: IndexMap<String, Value> = IndexMap::new();
        self.skip_ws();
        if self.peek() == Some(b'}') {
            self.pos += 1;
            return Ok(Value::Object(map));
        }
        loop {
            self.skip_ws();
            let key = self.parse_key()?;
            self.skip_ws();
            self.expect(b':')?;
            self.skip_ws();
            let value = self.parse_value()?;
            // Duplicate keys: last value wins, first position kept.
            map.insert(key, value);
            self.skip_ws();
            match self.bump() {
                Some(b',') => continue,
                Some(b'}') => return Ok(Value::Object(map)),
                Some(c) => {
                    self.pos -= 1;
                    return Err(self.err(format!("expected ',' or '}}', found '{}'", c as char)));
                }
                None => {
                    return Err(self.err("unterminated object"));
                }
            }
        }
    }

    fn parse_key(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(b'\'') => self.parse_single_quoted(),
            Some(b'"') => self.parse_double_quoted(),
            Some(c) if c == b'$' || c == b'_' || c.is_ascii_alphabetic() => {
                let start = self.pos;
                while matches!(self.peek(), Some(c) if c == b'$' || c == b'_' || c.is_ascii_alphanumeric())
                {
                    self.pos += 1;
                }
                Ok(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
            }
            _ => Err(self.err("expected object key")),
        }
    }

    fn parse_array(&mut self) -> Result<Value, ParseError> {
        self.expect(b'[')?;
        let mut items = Vec::new();
        self.skip_ws();
        if self.peek() == Some(b']') {
            self.pos += 1;
            return Ok(Value::Array(items));
        }
        loop {
            self.skip_ws();
            items.push(self.parse_value()?);
            self.skip_ws();
            match self.bump() {
                Some(b',') => continue,
                Some(b']') => return Ok(Value::Array(items)),
                Some(c) => {
                    self.pos -= 1;
                    return Err(self.err(format!("expected ',' or ']', found '{}'", c as char)));
                }
                None => return Err(self.err("unterminated array")),
            }
        }
    }

    /// Single quotes recognize exactly `\'` and `\\`; any other backslash
    /// is a literal character.
    fn parse_single_quoted(&mut self) -> Result<String, ParseError> {
        self.expect(b'\'')?;
        let mut out = Vec::new();
        loop {
            match self.bump() {
                Some(b'\'') => return Ok(String::from_utf8_lossy(&out).into_owned()),
                Some(b'\\') => match self.peek() {
                    Some(c @ (b'\'' | b'\\')) => {
                        out.push(c);
                        self.pos += 1;
                    }
                    _ => out.push(b'\\'),
                },
                Some(c) => out.push(c),
                None => return Err(self.err("unterminated string literal")),
            }
        }
    }

    /// Double quotes use the full JSON escape set so canonical JSON output
    /// always parses back.
    fn parse_double_quoted(&mut self) -> Result<String, ParseError> {
        self.expect(b'"')?;
        let mut out = String::new();
        loop {
            match self.bump() {
                Some(b'"') => return Ok(out),
                Some(b'\\') => match self.bump() {
                    Some(b'"') => out.push('"'),
                    Some(b'\\') => out.push('\\'),
                    Some(b'/') => out.push('/'),
                    Some(b'b') => out.push('\u{08}'),
                    Some(b'f') => out.push('\u{0c}'),
                    Some(b'n') => out.push('\n'),
                    Some(b'r') => out.push('\r'),
                    Some(b't') => out.push('\t'),
                    Some(b'u') => out.push(self.parse_unicode_escape()?),
                    Some(c) => {
                        self.pos -= 1;
                        return Err(self.err(format!("invalid escape '\\{}'", c as char)));
                    }
                    None => return Err(self.err("unterminated string literal")),
                },
                Some(c) if c < 0x80 => out.push(c as char),
                Some(first) => {
                    // Re-assemble a multi-byte UTF-8 sequence.
                    let len = utf8_len(first);
                    let start = self.pos - 1;
                    let end = (start + len).min(self.src.len());
                    self.pos = end;
                    out.push_str(&String::from_utf8_lossy(&self.src[start..end]));
                }
                None => return Err(self.err("unterminated string literal")),
            }
        }
    }

    fn parse_unicode_escape(&mut self) -> Result<char, ParseError> {
        let first = self.parse_hex4()?;
        // Surrogate pairs encode astral characters.
        if (0xD800..0xDC00).contains(&first) {
            if self.peek() == Some(b'\\') && self.src.get(self.pos + 1) == Some(&b'u') {
                self.pos += 2;
                let second = self.parse_hex4()?;
                if (0xDC00..0xE000).contains(&second) {
                    let c = 0x10000 + ((first - 0xD800) << 10) + (second - 0xDC00);
                    return char::from_u32(c).ok_or_else(|| self.err("invalid surrogate pair"));
                }
            }
            return Err(self.err("unpaired surrogate in \\u escape"));
        }
        char::from_u32(first).ok_or_else(|| self.err("invalid \\u escape"))
    }

    fn parse_hex4(&mut self) -> Result<u32, ParseError> {
        let mut v: u32 = 0;
        for _ in 0..4 {
            let d = match self.bump() {
                Some(c @ b'0'..=b'9') => (c - b'0') as u32,
                Some(c @ b'a'..=b'f') => (c - b'a' + 10) as u32,
                Some(c @ b'A'..=b'F') => (c - b'A' + 10) as u32,
                _ => {
                    return Err(self.err("expected four hex digits after \\u"));
                }
            };
            v = v * 16 + d;
        }
        Ok(v)
    }

    fn parse_number(&mut self) -> Result<Value, ParseError> {
        let start = self.pos;
        if self.peek() == Some(b'-') {
            self.pos += 1;
        }
        let mut saw_digit = false;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
            saw_digit = true;
        }
        if !saw_digit {
            return Err(self.err("expected digits in number"));
        }
        let mut is_float = false;
        if self.peek() == Some(b'.') {
            is_float = true;
            self.pos += 1;
            if !matches!(self.peek(), Some(b'0'..=b'9')) {
                return Err(self.err("expected digits after decimal point"));
            }
            while matches!(self.peek(), Some(b'0'..=b'9')) {
                self.pos += 1;
            }
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            is_float = true;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if !matches!(self.peek(), Some(b'0'..=b'9')) {
                return Err(self.err("expected digits in exponent"));
            }
            while matches!(self.peek(), Some(b'0'..=b'9')) {
                self.pos += 1;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii number");
        if !is_float {
            if let Ok(i) = text.parse::<i64>() {
                return Ok(Value::Int(i));
            }
        }
        text.parse::<f64>()
            .map(Value::Float)
            .map_err(|_| self.err("invalid number"))
    }

    fn parse_word(&mut self) -> Result<Value, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphabetic()) {
            self.pos += 1;
        }
        match &self.src[start..self.pos] {
            b"true" => Ok(Value::Bool(true)),
            b"false" => Ok(Value::Bool(false)),
            b"null" => Ok(Value::Null),
            word => {
                self.pos = start;
                Err(self.err(format!(
                    "unexpected word '{}'",
                    String::from_utf8_lossy(word)
                )))
            }
        }
    }
}

fn utf8_len(first: u8) -> usize {
    match first {
        0xC0..=0xDF => 2,
        0xE0..=0xEF => 3,
        0xF0..=0xF7 => 4,
        _ => 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valid_login_query() {
        let v = parse_relaxed("{ username: 'tolkien', password: 'hobbit' }").unwrap();
        assert_eq!(
            v,
            Value::object([
                ("username", Value::text("tolkien")),
                ("password", Value::text("hobbit")),
            ])
        );
    }

    #[test]
    fn empty_object() {
        assert_eq!(parse_relaxed("{}").unwrap(), Value::object::<&str>([]));
    }

    #[test]
    fn or_injection_query_text() {
        let src = "{ username: 'tolkien', $or: [ {}, { 'a': 'a', password: '' } ], $comment: 'successful MongoDB injection' }";
        let v = parse_relaxed(src).unwrap();
        let obj = v.as_object().unwrap();
        assert_eq!(
            obj.keys().collect::<Vec<_>>(),
            ["username", "$or", "$comment"]
        );
        assert_eq!(obj["$or"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn unterminated_string_is_an_error() {
        let err = parse_relaxed("{ a: 'b").unwrap_err();
        assert!(err.message.contains("unterminated"));
        assert!(err.offset <= "{ a: 'b".len());
    }

    #[test]
    fn trailing_garbage_is_an_error() {
        assert!(parse_relaxed("{} x").is_err());
        assert!(parse_relaxed("1 2").is_err());
    }

    #[test]
    fn duplicate_keys_last_wins() {
        let v = parse_relaxed("{ a: 1, a: 2 }").unwrap();
        assert_eq!(v, Value::object([("a", Value::Int(2))]));
    }

    #[test]
    fn numbers_ints_floats_and_sign() {
        assert_eq!(parse_relaxed("-42").unwrap(), Value::Int(-42));
        assert_eq!(parse_relaxed("3.5").unwrap(), Value::Float(3.5));
        assert_eq!(parse_relaxed("1e2").unwrap(), Value::Float(100.0));
    }

    #[test]
    fn single_quote_escapes() {
        assert_eq!(parse_relaxed(r"'a\'b'").unwrap(), Value::text("a'b"));
        assert_eq!(parse_relaxed(r"'a\\b'").unwrap(), Value::text(r"a\b"));
        // Unknown escapes keep the backslash literally.
        assert_eq!(parse_relaxed(r"'a\nb'").unwrap(), Value::text(r"a\nb"));
    }

    #[test]
    fn strict_json_parses() {
        let src = r#"{"a":[1,2.5,null,true],"b":{"c":"text \"q\" A"}}"#;
        let v = parse_relaxed(src).unwrap();
        assert_eq!(v.get("b").unwrap().get("c").unwrap(), &Value::text("text \"q\" A"));
    }

    #[test]
    fn concat_builder_is_verbatim() {
        assert_eq!(
            build_concat_login_query("tolkien", "hobbit"),
            "{ username: 'tolkien', password: 'hobbit' }"
        );
        assert_eq!(
            build_concat_login_query("", ""),
            "{ username: '', password: '' }"
        );
    }

    #[test]
    fn concat_builder_reproduces_or_injection() {
        let username = "tolkien', $or: [ {}, { 'a': 'a";
        let password = "' } ], $comment: 'successful MongoDB injection";
        let query = build_concat_login_query(username, password);
        assert_eq!(
            query,
            "{ username: 'tolkien', $or: [ {}, { 'a': 'a', password: '' } ], $comment: 'successful MongoDB injection' }"
        );
        let parsed = parse_relaxed(&query).unwrap();
        assert_eq!(parsed.get("username"), Some(&Value::text("tolkien")));
    }

    #[test]
    fn error_offsets_stay_in_range() {
        for src in ["{", "{ a: ", "[1,", "'abc", "{ a: 'b' x }"] {
            let err = parse_relaxed(src).unwrap_err();
            assert!(err.offset <= src.len(), "offset out of range for {src:?}");
        }
    }
}
