//! Append-only party transcripts.

use std::fmt;
use std::str::FromStr;

use crate::codec::{Decoder, Encoder};
use crate::error::{Error, Result};
use crate::value::Value;

/// The role of one transcript entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EntryKind {
    Input,
    Randomness,
    SysParam,
    MessageIn { from: usize },
    /// `to == None` is a broadcast.
    MessageOut { to: Option<usize> },
    OracleQuery,
    OracleAnswer,
    Output,
}

impl EntryKind {
    pub fn tag(self) -> &'static str {
        match self {
            EntryKind::Input => "input",
            EntryKind::Randomness => "randomness",
            EntryKind::SysParam => "sysparam",
            EntryKind::MessageIn { .. } => "msg-in",
            EntryKind::MessageOut { .. } => "msg-out",
            EntryKind::OracleQuery => "oracle-query",
            EntryKind::OracleAnswer => "oracle-answer",
            EntryKind::Output => "output",
        }
    }

    /// Peer field as written in transcripts: a party number, `*` for
    /// broadcast, `-` when the kind has no peer.
    pub fn peer(self) -> String {
        match self {
            EntryKind::MessageIn { from } => from.to_string(),
            EntryKind::MessageOut { to: Some(to) } => to.to_string(),
            EntryKind::MessageOut { to: None } => "*".into(),
            _ => "-".into(),
        }
    }

    pub fn parse(tag: &str, peer: &str) -> Result<Self> {
        let party = || -> Result<usize> {
            peer.parse()
                .ok()
                .filter(|p: &usize| *p >= 1 && p.to_string() == peer)
                .ok_or_else(|| Error::domain(format!("bad peer {peer:?}")))
        };
        let kind = match tag {
            "input" => EntryKind::Input,
            "randomness" => EntryKind::Randomness,
            "sysparam" => EntryKind::SysParam,
            "msg-in" => EntryKind::MessageIn { from: party()? },
            "msg-out" if peer == "*" => EntryKind::MessageOut { to: None },
            "msg-out" => EntryKind::MessageOut { to: Some(party()?) },
            "oracle-query" => EntryKind::OracleQuery,
            "oracle-answer" => EntryKind::OracleAnswer,
            "output" => EntryKind::Output,
            other => return Err(Error::domain(format!("unknown entry kind {other:?}"))),
        };
        if kind.peer() != peer {
            return Err(Error::domain(format!("peer {peer:?} invalid for {tag}")));
        }
        Ok(kind)
    }
}

impl fmt::Display for EntryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for EntryKind {
    type Err = Error;

    /// Accepts `tag` or `tag@peer`.
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once('@') {
            Some((tag, peer)) => EntryKind::parse(tag, peer),
            None => EntryKind::parse(s, "-"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ViewEntry {
    pub round: u32,
    pub seq: u64,
    pub kind: EntryKind,
    pub payload: Value,
}

impl ViewEntry {
    pub(crate) fn encode_into(&self, e: &mut Encoder) {
        e.num(self.round)
            .num(self.seq)
            .token(self.kind.tag())
            .token(&self.kind.peer())
            .token(&self.payload.encode());
    }
}

/// Everything one party has seen, in order. Entries can only be appended.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PartyView {
    party: usize,
    entries: Vec<ViewEntry>,
}

impl PartyView {
    /// `party` is 1-based; the server is party `m`.
    pub fn new(party: usize) -> Self {
        PartyView {
            party,
            entries: Vec::new(),
        }
    }

    /// Rebuilds a view from stored entries, checking sequence numbers.
    pub fn from_entries(party: usize, entries: Vec<ViewEntry>) -> Result<Self> {
        for (i, e) in entries.iter().enumerate() {
            if e.seq != i as u64 {
                return Err(Error::domain(format!(
                    "party {party}: entry {i} has sequence number {}",
                    e.seq
                )));
            }
        }
        Ok(PartyView { party, entries })
    }

    pub fn party(&self) -> usize {
        self.party
    }

    pub fn entries(&self) -> &[ViewEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Appends one entry and returns its sequence number.
    pub fn append(&mut self, round: u32, kind: EntryKind, payload: Value) -> u64 {
        let seq = self.entries.len() as u64;
        self.entries.push(ViewEntry {
            round,
            seq,
            kind,
            payload,
        });
        seq
    }

    pub fn apply(&mut self, round: u32, delta: ViewDelta) {
        for (kind, payload) in delta.entries {
            self.append(round, kind, payload);
        }
    }

    /// Every entry of the given kind, in order.
    pub fn of_kind(&self, tag: &str) -> impl Iterator<Item = &ViewEntry> + '_ {
        let tag = tag.to_string();
        self.entries.iter().filter(move |e| e.kind.tag() == tag)
    }

    /// Whether `self` is an unmodified prefix of `later`.
    pub fn is_prefix_of(&self, later: &PartyView) -> bool {
        self.party == later.party
            && self.entries.len() <= later.entries.len()
            && self.entries[..] == later.entries[..self.entries.len()]
    }

    /// Canonical serialization: party, entry count, then every entry.
    pub fn encode(&self) -> String {
        let mut e = Encoder::new();
        self.encode_into(&mut e);
        e.finish()
    }

    pub(crate) fn encode_into(&self, e: &mut Encoder) {
        e.token("view").num(self.party).num(self.entries.len());
        for entry in &self.entries {
            entry.encode_into(e);
        }
    }

    pub fn decode(text: &str) -> Result<PartyView> {
        let mut d = Decoder::new(text);
        d.expect("view")?;
        let party = d.usize()?;
        let n = d.usize()?;
        let mut entries = Vec::with_capacity(n);
        for _ in 0..n {
            let round = d.u64()? as u32;
            let seq = d.u64()?;
            let tag = d.token()?;
            let peer = d.token()?;
            let kind = EntryKind::parse(tag, peer)?;
            let payload = Value::decode(d.token()?)?;
            entries.push(ViewEntry {
                round,
                seq,
                kind,
                payload,
            });
        }
        d.finish()?;
        PartyView::from_entries(party, entries)
    }
}

/// Entries produced by a sub-protocol for one party, not yet stamped with a
/// round or sequence number.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ViewDelta {
    pub entries: Vec<(EntryKind, Value)>,
}

impl ViewDelta {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, kind: EntryKind, payload: Value) -> &mut Self {
        self.entries.push((kind, payload));
        self
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
