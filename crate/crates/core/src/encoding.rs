//! Canonical text encoding used for hashing and for transaction payloads.
//!
//! A record is a set of `name=value` lines. Names are sorted lexicographically
//! and lines are joined by `\n` with no trailing newline. Values escape `\`
//! and newline; list items additionally percent-escape `%` and `,`.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Display;
use core::str::FromStr;

use thiserror::Error;

use crate::primitives::Digest;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("payload is not valid UTF-8")]
    Utf8,
    #[error("line without '=' separator")]
    MissingSeparator,
    #[error("duplicate field `{0}`")]
    DuplicateField(String),
    #[error("missing field `{0}`")]
    MissingField(&'static str),
    #[error("invalid value for field `{0}`")]
    InvalidValue(&'static str),
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("bad escape sequence")]
    BadEscape,
}

/// Builder and parsed form of a canonical record.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Canonical {
    fields: BTreeMap<String, String>,
}

impl Canonical {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a field. The value is escaped on output.
    pub fn field(mut self, name: &str, value: impl Display) -> Self {
        self.fields.insert(name.to_string(), value.to_string());
        self
    }

    pub fn list<I, T>(self, name: &str, items: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: AsRef<str>,
    {
        let joined = join_list(items);
        let mut this = self;
        this.fields.insert(name.to_string(), joined);
        this
    }

    /// Inserts a value that is already list-encoded.
    fn raw(mut self, name: &str, value: String) -> Self {
        self.fields.insert(name.to_string(), value);
        self
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, (name, value)) in self.fields.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            out.push_str(name);
            out.push('=');
            out.push_str(&escape(value));
        }
        out
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.to_text().into_bytes()
    }

    pub fn digest(&self) -> Digest {
        Digest::of(self.to_text().as_bytes())
    }

    pub fn parse(bytes: &[u8]) -> Result<Self, DecodeError> {
        let text = core::str::from_utf8(bytes).map_err(|_| DecodeError::Utf8)?;
        let mut fields = BTreeMap::new();
        if text.is_empty() {
            return Ok(Canonical { fields });
        }
        for line in text.split('\n') {
            let (name, value) = line.split_once('=').ok_or(DecodeError::MissingSeparator)?;
            let value = unescape(value)?;
            if fields.insert(name.to_string(), value).is_some() {
                return Err(DecodeError::DuplicateField(name.to_string()));
            }
        }
        Ok(Canonical { fields })
    }

    pub fn get(&self, name: &'static str) -> Result<&str, DecodeError> {
        self.fields
            .get(name)
            .map(String::as_str)
            .ok_or(DecodeError::MissingField(name))
    }

    pub fn get_opt(&self, name: &str) -> Option<&str> {
        self.fields.get(name).map(String::as_str)
    }

    pub fn parse_field<T: FromStr>(&self, name: &'static str) -> Result<T, DecodeError> {
        self.get(name)?
            .parse()
            .map_err(|_| DecodeError::InvalidValue(name))
    }

    pub fn get_list(&self, name: &'static str) -> Result<Vec<String>, DecodeError> {
        split_list(self.get(name)?)
    }

    pub fn fields(&self) -> &BTreeMap<String, String> {
        &self.fields
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }
}

impl FromIterator<(String, String)> for Canonical {
    fn from_iter<I: IntoIterator<Item = (String, String)>>(iter: I) -> Self {
        iter.into_iter()
            .fold(Canonical::new(), |c, (k, v)| c.raw(&k, v))
    }
}

fn escape(value: &str) -> String {
    let mut out = String::with_capacity(value.len());
    for ch in value.chars() {
        match ch {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(value: &str) -> Result<String, DecodeError> {
    let mut out = String::with_capacity(value.len());
    let mut chars = value.chars();
    while let Some(ch) = chars.next() {
        if ch == '\\' {
            match chars.next() {
                Some('\\') => out.push('\\'),
                Some('n') => out.push('\n'),
                _ => return Err(DecodeError::BadEscape),
            }
        } else {
            out.push(ch);
        }
    }
    Ok(out)
}

pub fn join_list<I, T>(items: I) -> String
where
    I: IntoIterator<Item = T>,
    T: AsRef<str>,
{
    let mut out = String::new();
    for (i, item) in items.into_iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        for ch in item.as_ref().chars() {
            match ch {
                '%' => out.push_str("%25"),
                ',' => out.push_str("%2C"),
                c => out.push(c),
            }
        }
    }
    out
}

pub fn split_list(value: &str) -> Result<Vec<String>, DecodeError> {
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|item| {
            let mut out = String::with_capacity(item.len());
            let mut rest = item;
            while let Some(pos) = rest.find('%') {
                out.push_str(&rest[..pos]);
                match rest.get(pos..pos + 3) {
                    Some("%25") => out.push('%'),
                    Some("%2C") => out.push(','),
                    _ => return Err(DecodeError::BadEscape),
                }
                rest = &rest[pos + 3..];
            }
            out.push_str(rest);
            Ok(out)
        })
        .collect()
}
