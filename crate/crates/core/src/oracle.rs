//! Oracle-aided execution: parties write queries to their own tapes, the
//! inner functionality is invoked once every party has queried, and each
//! answer lands on that party's read-only answer tape.

use crate::error::{Error, Result};
use crate::functionality::MAryFunctionality;
use crate::value::Value;
use crate::view::{EntryKind, PartyView};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleEventKind {
    Query,
    Answer,
}

/// One tape write, in global order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleEvent {
    pub call: usize,
    pub party: usize,
    pub kind: OracleEventKind,
}

#[derive(Debug, Clone, Default)]
struct AnswerTape {
    answers: Vec<Value>,
}

impl AnswerTape {
    /// Slot `call` may be written exactly once, and only in call order.
    fn write(&mut self, party: usize, call: usize, answer: Value) -> Result<()> {
        if self.answers.len() != call {
            return Err(Error::TapeViolation {
                party,
                detail: format!(
                    "answer for call {call} but tape already holds {} answers",
                    self.answers.len()
                ),
            });
        }
        self.answers.push(answer);
        Ok(())
    }
}

/// An outer protocol `g` bound to an inner oracle functionality `f`.
#[derive(Debug, Clone)]
pub struct OracleBinding {
    outer: String,
    inner: MAryFunctionality,
    query_tapes: Vec<Vec<Value>>,
    answer_tapes: Vec<AnswerTape>,
    pending: Vec<Option<Value>>,
    calls: usize,
    log: Vec<OracleEvent>,
}

impl OracleBinding {
    pub fn new(outer: impl Into<String>, inner: MAryFunctionality) -> Self {
        let m = inner.arity();
        OracleBinding {
            outer: outer.into(),
            inner,
            query_tapes: vec![Vec::new(); m],
            answer_tapes: vec![AnswerTape::default(); m],
            pending: vec![None; m],
            calls: 0,
            log: Vec::new(),
        }
    }

    pub fn outer(&self) -> &str {
        &self.outer
    }

    pub fn inner(&self) -> &MAryFunctionality {
        &self.inner
    }

    pub fn arity(&self) -> usize {
        self.inner.arity()
    }

    /// Completed calls so far.
    pub fn calls(&self) -> usize {
        self.calls
    }

    fn check_party(&self, party: usize) -> Result<()> {
        if party == 0 || party > self.arity() {
            return Err(Error::domain(format!(
                "party {party} outside 1..={}",
                self.arity()
            )));
        }
        Ok(())
    }

    /// Party `party` writes its query for the current call.
    pub fn submit(&mut self, party: usize, query: Value) -> Result<()> {
        self.check_party(party)?;
        let slot = &mut self.pending[party - 1];
        if slot.is_some() {
            return Err(Error::TapeViolation {
                party,
                detail: format!("second query for call {}", self.calls),
            });
        }
        *slot = Some(query.clone());
        self.query_tapes[party - 1].push(query);
        self.log.push(OracleEvent {
            call: self.calls,
            party,
            kind: OracleEventKind::Query,
        });
        Ok(())
    }

    /// Invokes the oracle once every party has queried. Each view gains the
    /// party's query and then its answer.
    pub fn invoke(
        &mut self,
        randomness: &[u64],
        round: u32,
        views: &mut [PartyView],
    ) -> Result<Vec<Value>> {
        let m = self.arity();
        if views.len() != m {
            return Err(Error::Arity {
                expected: m,
                actual: views.len(),
            });
        }
        if let Some(missing) = self.pending.iter().position(Option::is_none) {
            return Err(Error::IncompleteCall {
                call: self.calls,
                party: missing + 1,
            });
        }
        let queries: Vec<Value> = self.pending.iter().flatten().cloned().collect();
        let answers = self.inner.evaluate(&queries, randomness)?;
        let call = self.calls;
        for (p, answer) in answers.iter().enumerate() {
            self.answer_tapes[p].write(p + 1, call, answer.clone())?;
        }
        for (p, (query, answer)) in queries.into_iter().zip(&answers).enumerate() {
            views[p].append(round, EntryKind::OracleQuery, query);
            views[p].append(round, EntryKind::OracleAnswer, answer.clone());
            self.log.push(OracleEvent {
                call,
                party: p + 1,
                kind: OracleEventKind::Answer,
            });
        }
        self.pending = vec![None; m];
        self.calls += 1;
        Ok(answers)
    }

    /// Read-only view of a party's answer tape.
    pub fn answers(&self, party: usize) -> &[Value] {
        &self.answer_tapes[party - 1].answers
    }

    pub fn queries(&self, party: usize) -> &[Value] {
        &self.query_tapes[party - 1]
    }

    pub fn log(&self) -> &[OracleEvent] {
        &self.log
    }

    /// Checks that within every call all `m` parties queried before any
    /// answer was written.
    pub fn discipline_holds(&self) -> bool {
        let m = self.arity();
        let mut queried = vec![0usize; self.calls + 1];
        let mut answered = vec![false; self.calls + 1];
        for ev in &self.log {
            match ev.kind {
                OracleEventKind::Query => {
                    if answered[ev.call] {
                        return false;
                    }
                    queried[ev.call] += 1;
                }
                OracleEventKind::Answer => {
                    if queried[ev.call] != m {
                        return false;
                    }
                    answered[ev.call] = true;
                }
            }
        }
        true
    }
}

/// One complete oracle call. `queries[i]` is party `i + 1`'s query; a `None`
/// means that party never queried, which fails the call.
pub fn oracle_call(
    binding: &mut OracleBinding,
    queries: Vec<Option<Value>>,
    randomness: &[u64],
    round: u32,
    views: &mut [PartyView],
) -> Result<Vec<Value>> {
    if queries.len() != binding.arity() {
        return Err(Error::Arity {
            expected: binding.arity(),
            actual: queries.len(),
        });
    }
    for (i, q) in queries.into_iter().enumerate() {
        if let Some(q) = q {
            binding.submit(i + 1, q)?;
        }
    }
    binding.invoke(randomness, round, views)
}
