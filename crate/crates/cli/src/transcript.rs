//! Transcript and model files.

use std::fmt::Write as _;

use fedmpc::rational::{format_rational, parse_rational};
use fedmpc::view::ViewEntry;
use fedmpc::{EntryKind, Error, PartyView, Rational, Result, Value};

pub const TRANSCRIPT_MAGIC: &str = "fedmpc-transcript v1";

/// Header, then one line per view entry ordered by party and sequence:
/// `round party seq kind peer payload`.
pub fn write_transcript(digest: &str, views: &[PartyView]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{TRANSCRIPT_MAGIC}");
    let _ = writeln!(s, "config {digest}");
    let _ = writeln!(s, "parties {}", views.len());
    for view in views {
        for e in view.entries() {
            let _ = writeln!(
                s,
                "{} {} {} {} {} {}",
                e.round,
                view.party(),
                e.seq,
                e.kind.tag(),
                e.kind.peer(),
                e.payload.encode()
            );
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub digest: String,
    pub views: Vec<PartyView>,
}

pub fn read_transcript(text: &str) -> Result<Transcript> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut header = |expect: &str| -> Result<String> {
        let (line, l) = lines.next().ok_or_else(|| Error::Parse {
            line: 0,
            detail: "truncated transcript header".into(),
        })?;
        if expect.is_empty() {
            return if l == TRANSCRIPT_MAGIC {
                Ok(String::new())
            } else {
                Err(Error::Parse {
                    line,
                    detail: format!("expected {TRANSCRIPT_MAGIC:?}"),
                })
            };
        }
        l.strip_prefix(expect)
            .and_then(|r| r.strip_prefix(' '))
            .map(str::to_string)
            .ok_or_else(|| Error::Parse {
                line,
                detail: format!("expected `{expect} ...`"),
            })
    };
    header("")?;
    let digest = header("config")?;
    let parties: usize = header("parties")?.parse().map_err(|_| Error::Parse {
        line: 3,
        detail: "bad party count".into(),
    })?;
    let mut entries: Vec<Vec<ViewEntry>> = vec![Vec::new(); parties];
    let mut last_party = 0;
    for (line, l) in lines {
        let bad = |detail: String| Error::Parse { line, detail };
        let fields: Vec<&str> = l.splitn(6, ' ').collect();
        let [round, party, seq, tag, peer, payload] = fields[..] else {
            return Err(bad("expected 6 fields".into()));
        };
        let round: u32 = round.parse().map_err(|_| bad("bad round".into()))?;
        let party: usize = party.parse().map_err(|_| bad("bad party".into()))?;
        let seq: u64 = seq.parse().map_err(|_| bad("bad sequence number".into()))?;
        if party == 0 || party > parties || party < last_party {
            return Err(bad(format!("party {party} out of order")));
        }
        last_party = party;
        let kind = EntryKind::parse(tag, peer).map_err(|e| bad(e.to_string()))?;
        let payload = Value::decode(payload).map_err(|e| bad(e.to_string()))?;
        entries[party - 1].push(ViewEntry {
            round,
            seq,
            kind,
            payload,
        });
    }
    let views = entries
        .into_iter()
        .enumerate()
        .map(|(i, e)| PartyView::from_entries(i + 1, e))
        .collect::<Result<_>>()?;
    Ok(Transcript { digest, views })
}

/// One `num/den` per line.
pub fn write_model(model: &[Rational]) -> String {
    model.iter().map(|r| format_rational(r) + "\n").collect()
}

pub fn read_model(text: &str) -> Result<Vec<Rational>> {
    text.lines()
        .enumerate()
        .map(|(i, l)| {
            parse_rational(l.trim()).map_err(|e| Error::Parse {
                line: i + 1,
                detail: e.to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use fedmpc::rational::ratio;

    fn views() -> Vec<PartyView> {
        let mut a = PartyView::new(1);
        a.append(0, EntryKind::Input, Value::Model(vec![ratio(-1, 2)]));
        a.append(0, EntryKind::MessageOut { to: Some(2) }, Value::Ack);
        let mut b = PartyView::new(2);
        b.append(0, EntryKind::MessageIn { from: 1 }, Value::Ack);
        b.append(1, EntryKind::MessageOut { to: None }, Value::List(vec![Value::Bottom]));
        vec![a, b]
    }

    #[test]
    fn round_trip() {
        let text = write_transcript("0badc0de", &views());
        assert!(text.starts_with("fedmpc-transcript v1\nconfig 0badc0de\nparties 2\n0 1 0 input - "));
        let t = read_transcript(&text).unwrap();
        assert_eq!(t.digest, "0badc0de");
        assert_eq!(t.views, views());
        assert_eq!(write_transcript(&t.digest, &t.views), text);
    }

    #[test]
    fn rejects_damage() {
        let text = write_transcript("00000000", &views());
        assert!(read_transcript(&text.replace("v1", "v2")).is_err());
        let swapped: Vec<&str> = text.lines().collect();
        let reordered = [swapped[0], swapped[1], swapped[2], swapped[5], swapped[3]].join("\n");
        assert!(matches!(read_transcript(&reordered), Err(Error::Parse { line: 5, .. })));
        let gap = text.replace("0 1 1 msg-out", "0 1 2 msg-out");
        assert!(read_transcript(&gap).is_err());
    }

    #[test]
    fn model_files() {
        let m = vec![ratio(3, 4), ratio(-2, 1), ratio(0, 1)];
        assert_eq!(write_model(&m), "3/4\n-2/1\n0/1\n");
        assert_eq!(read_model(&write_model(&m)).unwrap(), m);
        assert!(matches!(read_model("1/2\nx\n"), Err(Error::Parse { line: 2, .. })));
    }
}
