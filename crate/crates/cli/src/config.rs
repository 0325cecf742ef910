use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use sdpp::Error;

/// `key = value` settings read from a config file. Blank lines and lines
/// starting with `#` are ignored; keys are the long flag names.
#[derive(Debug, Default)]
pub struct ConfigFile {
    values: HashMap<String, String>,
}

pub const KEYS: &[&str] = &[
    "model",
    "scheme",
    "seed",
    "replicas",
    "samples",
    "steps",
    "step-size",
    "friction",
    "grad-samples",
    "jobs",
    "data",
    "out",
    "grid",
];

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = fs::read_to_string(path).map_err(|e| Error::Usage(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, Error> {
        let mut values = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: format!("expected key = value, got {line:?}"),
            })?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("unknown key {key:?}"),
                });
            }
            values.insert(key.to_string(), value.trim().to_string());
        }
        Ok(ConfigFile { values })
    }

    /// `flag` if given, else the file's value for `key`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, Error> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Usage(format!("invalid value {v:?} for {key} in config file"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let cfg = ConfigFile::parse("# comment\nseed = 7\nstep-size=0.25\n\n").unwrap();
        assert_eq!(cfg.pick(None::<u64>, "seed").unwrap(), Some(7));
        assert_eq!(cfg.pick(Some(3u64), "seed").unwrap(), Some(3));
        assert_eq!(cfg.pick(None::<f64>, "step-size").unwrap(), Some(0.25));
        assert_eq!(cfg.pick(None::<usize>, "replicas").unwrap(), None);
    }

    #[test]
    fn bad_lines_rejected() {
        assert!(matches!(ConfigFile::parse("seed 7"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(ConfigFile::parse("colour = red"), Err(Error::Parse { .. })));
        let cfg = ConfigFile::parse("seed = x").unwrap();
        assert!(matches!(cfg.pick(None::<u64>, "seed"), Err(Error::Usage(_))));
    }
}
