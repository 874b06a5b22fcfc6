//! Length-prefixed decimal token encoding.
//!
//! A token is `<byte length>:<bytes>`. Composite values are a fixed sequence
//! of tokens led by a tag token; nested values are wrapped in one token. The
//! framing makes every encoding self-delimiting, so concatenations decode
//! uniquely.

use crate::error::{Error, Result};
use crate::rational::{format_rational, parse_rational, Rational};

#[derive(Debug, Default, Clone)]
pub struct Encoder {
    buf: String,
}

impl Encoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn token(&mut self, text: &str) -> &mut Self {
        self.buf.push_str(&text.len().to_string());
        self.buf.push(':');
        self.buf.push_str(text);
        self
    }

    pub fn num(&mut self, n: impl ToString) -> &mut Self {
        self.token(&n.to_string())
    }

    pub fn rational(&mut self, r: &Rational) -> &mut Self {
        self.token(&format_rational(r))
    }

    pub fn finish(self) -> String {
        self.buf
    }
}

#[derive(Debug, Clone)]
pub struct Decoder<'a> {
    rest: &'a str,
}

impl<'a> Decoder<'a> {
    pub fn new(input: &'a str) -> Self {
        Decoder { rest: input }
    }

    pub fn is_empty(&self) -> bool {
        self.rest.is_empty()
    }

    pub fn token(&mut self) -> Result<&'a str> {
        let colon = self
            .rest
            .find(':')
            .ok_or_else(|| Error::domain("truncated token"))?;
        let len = canonical_usize(&self.rest[..colon])?;
        let body_start = colon + 1;
        let end = body_start
            .checked_add(len)
            .filter(|&e| e <= self.rest.len() && self.rest.is_char_boundary(e))
            .ok_or_else(|| Error::domain("token length exceeds input"))?;
        let token = &self.rest[body_start..end];
        self.rest = &self.rest[end..];
        Ok(token)
    }

    pub fn expect(&mut self, tag: &str) -> Result<()> {
        let t = self.token()?;
        if t != tag {
            return Err(Error::domain(format!("expected tag {tag:?}, found {t:?}")));
        }
        Ok(())
    }

    pub fn u64(&mut self) -> Result<u64> {
        let t = self.token()?;
        canonical_u64(t)
    }

    pub fn usize(&mut self) -> Result<usize> {
        let t = self.token()?;
        canonical_usize(t)
    }

    pub fn rational(&mut self) -> Result<Rational> {
        let t = self.token()?;
        let r = parse_rational(t)?;
        if format_rational(&r) != t {
            return Err(Error::domain(format!("non-canonical rational {t:?}")));
        }
        Ok(r)
    }

    pub fn finish(self) -> Result<()> {
        if self.rest.is_empty() {
            Ok(())
        } else {
            Err(Error::domain("trailing bytes after encoding"))
        }
    }
}

fn canonical_u64(t: &str) -> Result<u64> {
    let n: u64 = t
        .parse()
        .map_err(|_| Error::domain(format!("not a number: {t:?}")))?;
    if n.to_string() != t {
        return Err(Error::domain(format!("non-canonical number {t:?}")));
    }
    Ok(n)
}

fn canonical_usize(t: &str) -> Result<usize> {
    canonical_u64(t).map(|n| n as usize)
}
