//! Text formats for tabular data: the `episode,step,s,a,r,s',terminal`
//! dataset format and the proposition report CSV.

use std::fmt::Write as _;

use super::{SweepRow, TabularTransition};
use crate::error::{Error, Result};

pub const DATASET_HEADER: &str = "episode,step,s,a,r,s_next,terminal";
pub const REPORT_HEADER: &str = "instance_seed,proposition,pass,detail";

#[derive(Debug, Clone, PartialEq)]
pub struct TabularRecord {
    pub episode: u64,
    pub step: u64,
    pub transition: TabularTransition,
}

fn field<T: std::str::FromStr>(raw: &str, line: usize, name: &str) -> Result<T> {
    raw.trim().parse().map_err(|_| Error::Parse {
        line,
        msg: format!("bad {name} field {raw:?}"),
    })
}

pub fn parse_dataset(text: &str) -> Result<Vec<TabularRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim().starts_with("episode") => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                msg: format!("missing header {DATASET_HEADER:?}"),
            })
        }
    }
    let mut out = Vec::new();
    for (i, raw) in lines {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = raw.split(',').collect();
        if f.len() != 7 {
            return Err(Error::Parse {
                line,
                msg: format!("expected 7 fields, found {}", f.len()),
            });
        }
        let terminal: u8 = field(f[6], line, "terminal")?;
        if terminal > 1 {
            return Err(Error::Parse {
                line,
                msg: "terminal must be 0 or 1".into(),
            });
        }
        out.push(TabularRecord {
            episode: field(f[0], line, "episode")?,
            step: field(f[1], line, "step")?,
            transition: TabularTransition::new(
                field(f[2], line, "s")?,
                field(f[3], line, "a")?,
                field(f[4], line, "r")?,
                field(f[5], line, "s'")?,
                terminal == 1,
            ),
        });
    }
    Ok(out)
}

pub fn format_dataset(records: &[TabularRecord]) -> String {
    let mut out = String::from(DATASET_HEADER);
    out.push('\n');
    for r in records {
        let t = &r.transition;
        let _ = writeln!(
            out,
            "{},{},{},{},{:.16e},{},{}",
            r.episode, r.step, t.s, t.a, t.r, t.s_next, u8::from(t.terminal)
        );
    }
    out
}

pub fn format_report(rows: &[SweepRow]) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.instance_seed,
            r.proposition,
            r.pass,
            r.detail.replace(',', ";")
        );
    }
    out
}
