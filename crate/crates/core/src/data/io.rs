//! Canonical text format.
//!
//! ```text
//! version=1,<obs_dim>,<act_dim>,<discrete 0|1>
//! <episode_id>,<step_index>,<obs...>,<act...>,<reward>,<terminal 0|1>
//! ```
//!
//! Reals are written as `{:.16e}` (17 significant digits). For discrete
//! datasets `act_dim` is the number of actions and each line carries a
//! single integer action index.

use std::fmt::Write as _;
use std::path::Path;

use super::{Dataset, StepRecord};
use crate::error::{Error, Result};
use crate::nn::ActionSpace;

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn field<T: std::str::FromStr>(raw: &str, line: usize, name: &str) -> Result<T> {
    raw.trim()
        .parse()
        .map_err(|_| parse_err(line, format!("bad {name} field {raw:?}")))
}

fn flag(raw: &str, line: usize, name: &str) -> Result<bool> {
    match raw.trim() {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(parse_err(line, format!("{name} must be 0 or 1, found {raw:?}"))),
    }
}

pub fn format_dataset(dataset: &Dataset) -> String {
    let space = dataset.action_space();
    let mut out = format!(
        "version=1,{},{},{}\n",
        dataset.obs_dim(),
        space.encoded_dim(),
        u8::from(space.is_discrete())
    );
    for s in dataset.steps() {
        let _ = write!(out, "{},{}", s.episode_id, s.step_index);
        for x in &s.observation {
            let _ = write!(out, ",{x:.16e}");
        }
        if space.is_discrete() {
            let _ = write!(out, ",{}", s.action[0] as u64);
        } else {
            for x in &s.action {
                let _ = write!(out, ",{x:.16e}");
            }
        }
        let _ = writeln!(out, ",{:.16e},{}", s.reward, u8::from(s.terminal));
    }
    out
}

pub fn parse_dataset(text: &str) -> Result<Dataset> {
    let mut lines = text.lines().enumerate();
    let header = lines
        .next()
        .map(|(_, h)| h)
        .ok_or_else(|| parse_err(1, "missing header"))?;
    let h: Vec<&str> = header.split(',').map(str::trim).collect();
    if h.len() != 4 || h[0] != "version=1" {
        return Err(parse_err(
            1,
            format!("expected header version=1,<obs_dim>,<act_dim>,<discrete>, found {header:?}"),
        ));
    }
    let obs_dim: usize = field(h[1], 1, "obs_dim")?;
    let act_dim: usize = field(h[2], 1, "act_dim")?;
    let space = if flag(h[3], 1, "discrete")? {
        ActionSpace::Discrete(act_dim)
    } else {
        ActionSpace::Continuous(act_dim)
    };
    if obs_dim == 0 || act_dim == 0 {
        return Err(Error::Validation("dimensions in the header must be positive".into()));
    }
    let act_fields = space.stored_dim();
    let width = 2 + obs_dim + act_fields + 2;

    let mut steps = Vec::new();
    for (i, raw) in lines {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = raw.split(',').collect();
        if f.len() != width {
            return Err(Error::Validation(format!(
                "line {line}: expected {width} fields, found {}",
                f.len()
            )));
        }
        let observation = f[2..2 + obs_dim]
            .iter()
            .map(|x| field(x, line, "observation"))
            .collect::<Result<Vec<f64>>>()?;
        let action = if space.is_discrete() {
            vec![field::<u64>(f[2 + obs_dim], line, "action")? as f64]
        } else {
            f[2 + obs_dim..2 + obs_dim + act_fields]
                .iter()
                .map(|x| field(x, line, "action"))
                .collect::<Result<Vec<f64>>>()?
        };
        steps.push(StepRecord {
            episode_id: field(f[0], line, "episode_id")?,
            step_index: field(f[1], line, "step_index")?,
            observation,
            action,
            reward: field(f[width - 2], line, "reward")?,
            terminal: flag(f[width - 1], line, "terminal")?,
        });
    }
    Dataset::new(obs_dim, space, steps)
}

pub fn write_dataset(path: &Path, dataset: &Dataset) -> Result<()> {
    std::fs::write(path, format_dataset(dataset)).map_err(|e| Error::io(path, e))
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_dataset_is_header_only() {
        let d = Dataset::new(2, ActionSpace::Continuous(1), vec![]).unwrap();
        let text = format_dataset(&d);
        assert_eq!(text, "version=1,2,1,0\n");
        assert_eq!(parse_dataset(&text).unwrap(), d);
    }

    #[test]
    fn single_step_round_trips_bitwise() {
        let d = Dataset::new(
            2,
            ActionSpace::Continuous(1),
            vec![StepRecord {
                episode_id: 3,
                step_index: 0,
                observation: vec![0.1 + 0.2, -0.0],
                action: vec![1.0 / 3.0],
                reward: f64::MIN_POSITIVE,
                terminal: true,
            }],
        )
        .unwrap();
        let back = parse_dataset(&format_dataset(&d)).unwrap();
        let (a, b) = (&d.steps()[0], &back.steps()[0]);
        for (x, y) in a.observation.iter().chain(&a.action).zip(b.observation.iter().chain(&b.action)) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        assert_eq!(a.reward.to_bits(), b.reward.to_bits());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = "version=1,1,2,1\n0,0,1.0,1,0.5,1\n0,0,abc,1,0.5,1\n";
        match parse_dataset(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_dataset("version=1,1,2,1\n0,0,1.0,0.5,1\n"),
            Err(Error::Validation(_))
        ));
        assert!(matches!(parse_dataset("version=2,1,1,0\n"), Err(Error::Parse { line: 1, .. })));
    }
}
