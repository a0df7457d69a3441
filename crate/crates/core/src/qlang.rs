//! Text syntax for queries (format v1).
//!
//! ```text
//! query    := term | "and(" query {"," query} ")"
//! term     := "count_objects(" classlist "," natlist ")" [",closed"]
//!           | "range_count_objects(" classlist "," natlist "," intlist ")" [",closed"]
//!           | "count_in(" class "," nat "," bound ")" [",closed"]
//!           | "count_in(" classlist "," natlist "," boundlist ")" [",closed"]
//!           | "presence(" classlist ")"
//!           | "sum_objects(" nat ")"
//! bound    := nat | "inf"
//! ```
//!
//! Lists may be empty and whitespace is insignificant. `range_count_objects`
//! takes indicators in {-1, 0, 1}, the sign of the actual count minus the
//! given one.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use crate::error::{Error, Result};
use crate::query::{indicator_to_interval, CountConstraint, Interval, Mode, Query};
use crate::vocab::LabelVocab;

pub const FORMAT_VERSION: u32 = 1;

pub fn parse(text: &str, vocab: &LabelVocab) -> Result<Query> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        vocab,
    };
    let q = p.query()?;
    p.ws();
    if p.pos != p.src.len() {
        return Err(p.syntax("end of input"));
    }
    q.validate(vocab)?;
    Ok(q)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    vocab: &'a LabelVocab,
}

fn is_word_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

impl Parser<'_> {
    fn syntax(&self, expected: &str) -> Error {
        Error::SyntaxError {
            offset: self.pos.min(self.src.len()),
            expected: expected.to_string(),
        }
    }

    fn ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, byte: u8) -> bool {
        if self.peek() == Some(byte) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, byte: u8) -> Result<()> {
        if self.eat(byte) {
            Ok(())
        } else {
            Err(self.syntax(&format!("`{}`", byte as char)))
        }
    }

    fn word(&mut self) -> &str {
        self.ws();
        let start = self.pos;
        while self.pos < self.src.len() && is_word_byte(self.src[self.pos]) {
            self.pos += 1;
        }
        // only ASCII word bytes were consumed
        core::str::from_utf8(&self.src[start..self.pos]).unwrap_or("")
    }

    fn query(&mut self) -> Result<Query> {
        self.ws();
        let start = self.pos;
        let keyword = self.word().to_string();
        if keyword.is_empty() || self.peek() != Some(b'(') {
            self.pos = start;
            return Err(self.syntax("query term"));
        }
        self.pos += 1;
        let q = match keyword.as_str() {
            "and" => {
                let mut parts = alloc::vec![self.query()?];
                while self.eat(b',') {
                    parts.push(self.query()?);
                }
                self.expect(b')')?;
                Query::And(parts)
            }
            "count_objects" => {
                let classes = self.class_list()?;
                self.expect(b',')?;
                let counts = self.list(|p| p.nat())?;
                self.expect(b')')?;
                let constraints = zip_lists(&classes, &counts, |&(c, _), &n| {
                    Ok(CountConstraint {
                        class: c,
                        interval: Interval::exactly(n),
                    })
                })?;
                let mode = self.mode_suffix();
                Query::Counts { constraints, mode }
            }
            "range_count_objects" => {
                let classes = self.class_list()?;
                self.expect(b',')?;
                let counts = self.list(|p| p.nat())?;
                self.expect(b',')?;
                let indicators = self.list(|p| p.int())?;
                self.expect(b')')?;
                if indicators.len() != counts.len() {
                    return Err(Error::ListLengthMismatch {
                        classes: classes.len(),
                        counts: indicators.len(),
                    });
                }
                let pairs: Vec<(u32, i64)> = counts.into_iter().zip(indicators).collect();
                let constraints = zip_lists(&classes, &pairs, |&(c, _), &(n, ind)| {
                    Ok(CountConstraint {
                        class: c,
                        interval: indicator_to_interval(n as i64, ind)?,
                    })
                })?;
                let mode = self.mode_suffix();
                Query::Counts { constraints, mode }
            }
            "count_in" => {
                let constraints = if self.peek() == Some(b'[') {
                    let classes = self.class_list()?;
                    self.expect(b',')?;
                    let los = self.list(|p| p.nat())?;
                    self.expect(b',')?;
                    let his = self.list(|p| p.bound())?;
                    if los.len() != his.len() {
                        return Err(Error::ListLengthMismatch {
                            classes: classes.len(),
                            counts: his.len(),
                        });
                    }
                    let bounds: Vec<(u32, Option<u32>)> = los.into_iter().zip(his).collect();
                    zip_lists(&classes, &bounds, |&(c, _), &(lo, hi)| {
                        Ok(CountConstraint {
                            class: c,
                            interval: Interval::new(lo, hi)?,
                        })
                    })?
                } else {
                    let (class, _) = self.class()?;
                    self.expect(b',')?;
                    let lo = self.nat()?;
                    self.expect(b',')?;
                    let hi = self.bound()?;
                    alloc::vec![CountConstraint {
                        class,
                        interval: Interval::new(lo, hi)?,
                    }]
                };
                self.expect(b')')?;
                let mode = self.mode_suffix();
                Query::Counts { constraints, mode }
            }
            "presence" => {
                let classes = self.class_list()?.into_iter().map(|(c, _)| c).collect();
                self.expect(b')')?;
                Query::Presence { classes }
            }
            "sum_objects" => {
                let target = self.nat()?;
                self.expect(b')')?;
                Query::Sum { target }
            }
            _ => {
                self.pos = start;
                return Err(self.syntax("query term"));
            }
        };
        Ok(q)
    }

    /// Consumes a trailing `,closed` if present.
    fn mode_suffix(&mut self) -> Mode {
        let save = self.pos;
        if self.eat(b',') && self.word() == "closed" && self.peek() != Some(b'(') {
            return Mode::Closed;
        }
        self.pos = save;
        Mode::Open
    }

    fn class(&mut self) -> Result<(usize, usize)> {
        self.ws();
        let at = self.pos;
        let name = self.word().to_string();
        if name.is_empty() {
            return Err(self.syntax("class name"));
        }
        Ok((self.vocab.resolve(&name)?, at))
    }

    fn class_list(&mut self) -> Result<Vec<(usize, usize)>> {
        self.list(|p| p.class())
    }

    fn list<T>(&mut self, mut item: impl FnMut(&mut Self) -> Result<T>) -> Result<Vec<T>> {
        self.expect(b'[')?;
        let mut out = Vec::new();
        if self.eat(b']') {
            return Ok(out);
        }
        loop {
            out.push(item(self)?);
            if self.eat(b']') {
                return Ok(out);
            }
            if !self.eat(b',') {
                return Err(self.syntax("`,` or `]`"));
            }
        }
    }

    fn digits(&mut self) -> Option<u64> {
        let start = self.pos;
        let mut v: u64 = 0;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            v = v
                .checked_mul(10)?
                .checked_add((self.src[self.pos] - b'0') as u64)?;
            self.pos += 1;
        }
        (self.pos > start).then_some(v)
    }

    fn nat(&mut self) -> Result<u32> {
        self.ws();
        let at = self.pos;
        match self.digits().and_then(|v| u32::try_from(v).ok()) {
            Some(v) => Ok(v),
            None => {
                self.pos = at;
                Err(self.syntax("natural number"))
            }
        }
    }

    fn int(&mut self) -> Result<i64> {
        self.ws();
        let at = self.pos;
        let neg = self.src.get(self.pos) == Some(&b'-');
        if neg {
            self.pos += 1;
        }
        match self.digits().and_then(|v| i64::try_from(v).ok()) {
            Some(v) => Ok(if neg { -v } else { v }),
            None => {
                self.pos = at;
                Err(self.syntax("integer"))
            }
        }
    }

    fn bound(&mut self) -> Result<Option<u32>> {
        self.ws();
        if self.src[self.pos..].starts_with(b"inf")
            && !self
                .src
                .get(self.pos + 3)
                .copied()
                .is_some_and(is_word_byte)
        {
            self.pos += 3;
            return Ok(None);
        }
        self.nat()
            .map(Some)
            .map_err(|_| self.syntax("natural number or `inf`"))
    }
}

fn zip_lists<A, B, T>(
    classes: &[A],
    counts: &[B],
    mut f: impl FnMut(&A, &B) -> Result<T>,
) -> Result<Vec<T>> {
    if classes.len() != counts.len() {
        return Err(Error::ListLengthMismatch {
            classes: classes.len(),
            counts: counts.len(),
        });
    }
    classes.iter().zip(counts).map(|(a, b)| f(a, b)).collect()
}

/// Canonical text for a query. `parse(print(q))` reproduces `q`.
pub fn print(query: &Query, vocab: &LabelVocab) -> String {
    let mut out = String::new();
    write_query(&mut out, query, vocab);
    out
}

fn write_query(out: &mut String, query: &Query, vocab: &LabelVocab) {
    match query {
        Query::Counts { constraints, mode } => {
            write_counts(out, constraints, vocab);
            if *mode == Mode::Closed {
                out.push_str(",closed");
            }
        }
        Query::Sum { target } => {
            let _ = write!(out, "sum_objects({target})");
        }
        Query::Presence { classes } => {
            out.push_str("presence(");
            write_list(out, classes, |o, &c| o.push_str(vocab.name(c)));
            out.push(')');
        }
        Query::And(parts) => {
            out.push_str("and(");
            for (i, q) in parts.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_query(out, q, vocab);
            }
            out.push(')');
        }
    }
}

fn write_counts(out: &mut String, cs: &[CountConstraint], vocab: &LabelVocab) {
    let names = |o: &mut String, c: &CountConstraint| o.push_str(vocab.name(c.class));
    if cs.iter().all(|c| c.interval.exact_value().is_some()) {
        out.push_str("count_objects(");
        write_list(out, cs, names);
        out.push(',');
        write_list(out, cs, |o, c| {
            let _ = write!(o, "{}", c.interval.lo);
        });
        out.push(')');
    } else if let [c] = cs {
        let _ = write!(out, "count_in({},{},", vocab.name(c.class), c.interval.lo);
        write_bound(out, c.interval.hi);
        out.push(')');
    } else if let Some(ind) = cs
        .iter()
        .map(|c| c.interval.as_indicator())
        .collect::<Option<Vec<_>>>()
    {
        out.push_str("range_count_objects(");
        write_list(out, cs, names);
        out.push(',');
        write_list(out, &ind, |o, (n, _)| {
            let _ = write!(o, "{n}");
        });
        out.push(',');
        write_list(out, &ind, |o, (_, i)| {
            let _ = write!(o, "{i}");
        });
        out.push(')');
    } else {
        out.push_str("count_in(");
        write_list(out, cs, names);
        out.push(',');
        write_list(out, cs, |o, c| {
            let _ = write!(o, "{}", c.interval.lo);
        });
        out.push(',');
        write_list(out, cs, |o, c| write_bound(o, c.interval.hi));
        out.push(')');
    }
}

fn write_bound(out: &mut String, hi: Option<u32>) {
    match hi {
        Some(h) => {
            let _ = write!(out, "{h}");
        }
        None => out.push_str("inf"),
    }
}

fn write_list<T>(out: &mut String, items: &[T], mut f: impl FnMut(&mut String, &T)) {
    out.push('[');
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        f(out, item);
    }
    out.push(']');
}
