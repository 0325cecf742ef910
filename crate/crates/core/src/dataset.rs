//! Plain-text observation files.
//!
//! One record per line; lines starting with `#` are comments and carry the
//! generator parameters. Survey files hold `0` or `1` per line, GMM files one
//! real per line, and HMM files start with a `K=<states> noise=<sd>` header
//! followed by one real per line.

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Observations {
    Survey { answers: Vec<bool> },
    Gmm { data: Vec<f64> },
    Hmm { data: Vec<f64>, n_states: usize, noise: f64 },
}

fn records(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_real(line: usize, s: &str) -> Result<f64> {
    let v: f64 = s.parse().map_err(|_| Error::Parse {
        line,
        message: format!("expected a real number, found {s:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            message: "non-finite observation".into(),
        });
    }
    Ok(v)
}

fn non_empty<T>(v: Vec<T>) -> Result<Vec<T>> {
    if v.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "no observations".into(),
        });
    }
    Ok(v)
}

impl Observations {
    pub fn parse_survey(text: &str) -> Result<Self> {
        let answers = records(text)
            .map(|(line, s)| match s {
                "0" => Ok(false),
                "1" => Ok(true),
                _ => Err(Error::Parse {
                    line,
                    message: format!("expected 0 or 1, found {s:?}"),
                }),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Observations::Survey {
            answers: non_empty(answers)?,
        })
    }

    pub fn parse_gmm(text: &str) -> Result<Self> {
        let data = records(text)
            .map(|(line, s)| parse_real(line, s))
            .collect::<Result<Vec<_>>>()?;
        Ok(Observations::Gmm { data: non_empty(data)? })
    }

    pub fn parse_hmm(text: &str) -> Result<Self> {
        let mut recs = records(text);
        let (hline, header) = recs.next().ok_or(Error::Parse {
            line: 0,
            message: "missing K=<n> noise=<sd> header".into(),
        })?;
        let mut n_states = None;
        let mut noise = None;
        for field in header.split_whitespace() {
            let bad = || Error::Parse {
                line: hline,
                message: format!("bad header field {field:?}"),
            };
            let (key, val) = field.split_once('=').ok_or_else(bad)?;
            match key {
                "K" => n_states = Some(val.parse::<usize>().map_err(|_| bad())?),
                "noise" => noise = Some(val.parse::<f64>().map_err(|_| bad())?),
                _ => return Err(bad()),
            }
        }
        let (n_states, noise) = match (n_states, noise) {
            (Some(k), Some(s)) if k >= 1 && s > 0.0 && s.is_finite() => (k, s),
            _ => {
                return Err(Error::Parse {
                    line: hline,
                    message: "header needs K >= 1 and noise > 0".into(),
                })
            }
        };
        let data = recs
            .map(|(line, s)| parse_real(line, s))
            .collect::<Result<Vec<_>>>()?;
        Ok(Observations::Hmm {
            data: non_empty(data)?,
            n_states,
            noise,
        })
    }

    pub fn len(&self) -> usize {
        match self {
            Observations::Survey { answers } => answers.len(),
            Observations::Gmm { data } | Observations::Hmm { data, .. } => data.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Serializes with `comments` written as leading `#` lines.
    pub fn to_text(&self, comments: &[String]) -> String {
        let mut out = String::new();
        for c in comments {
            let _ = writeln!(out, "# {c}");
        }
        match self {
            Observations::Survey { answers } => {
                for &a in answers {
                    out.push_str(if a { "1\n" } else { "0\n" });
                }
            }
            Observations::Gmm { data } => {
                for v in data {
                    let _ = writeln!(out, "{v}");
                }
            }
            Observations::Hmm { data, n_states, noise } => {
                let _ = writeln!(out, "K={n_states} noise={noise}");
                for v in data {
                    let _ = writeln!(out, "{v}");
                }
            }
        }
        out
    }
}
