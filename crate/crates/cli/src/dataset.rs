//! Client dataset files.
//!
//! ```text
//! # comment
//! client 1
//! 1 0 ; 1/2
//! 0 1 ; -3
//! client 2
//! 2 2 ; 1
//! ```
//!
//! A `client <id>` line opens a block; every following line until the next
//! block is one example, features then `;` then the label.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use fedmpc::rational::{format_rational, parse_rational};
use fedmpc::{ClientDataset, Error, Example, Result};

pub fn parse_datasets(text: &str) -> Result<Vec<ClientDataset>> {
    let mut blocks: Vec<(usize, u64, Vec<Example>)> = Vec::new();
    let mut ids = BTreeSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let bad = |detail: String| Error::Parse { line, detail };
        if let Some(rest) = content.strip_prefix("client") {
            let id: u64 = rest
                .trim()
                .parse()
                .map_err(|_| bad(format!("bad client id in {content:?}")))?;
            if !ids.insert(id) {
                return Err(bad(format!("client {id} defined twice")));
            }
            blocks.push((line, id, Vec::new()));
            continue;
        }
        let block = blocks
            .last_mut()
            .ok_or_else(|| bad("example before any `client` line".into()))?;
        let (features, label) = content
            .split_once(';')
            .ok_or_else(|| bad("expected `features ; label`".into()))?;
        let features = features
            .split_whitespace()
            .map(parse_rational)
            .collect::<Result<Vec<_>>>()
            .map_err(|e| bad(e.to_string()))?;
        let label = parse_rational(label.trim()).map_err(|e| bad(e.to_string()))?;
        block.2.push(Example::new(features, label));
    }
    blocks
        .into_iter()
        .map(|(line, id, examples)| {
            ClientDataset::new(id, examples).map_err(|e| Error::Parse {
                line,
                detail: e.to_string(),
            })
        })
        .collect()
}

pub fn format_datasets(datasets: &[ClientDataset]) -> String {
    let mut s = String::new();
    for ds in datasets {
        let _ = writeln!(s, "client {}", ds.owner());
        for ex in ds.examples() {
            let features: Vec<String> = ex.features.iter().map(format_rational).collect();
            let _ = writeln!(s, "{} ; {}", features.join(" "), format_rational(&ex.label));
        }
    }
    s
}
