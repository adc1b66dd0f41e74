//! Minimal flag parser: every flag is `--name value` except boolean
//! switches (`--oracle`, `--help`). Unknown flags are rejected.

use std::collections::BTreeMap;

use crate::CliError;

pub struct Flags {
    values: BTreeMap<String, String>,
    switches: Vec<String>,
}

/// Flags that take no value.
const SWITCHES: &[&str] = &["oracle"];

impl Flags {
    pub fn parse(args: &[String], allowed: &[&str], help: &str) -> Result<Flags, CliError> {
        let mut values = BTreeMap::new();
        let mut switches = Vec::new();
        let mut i = 0;
        while i < args.len() {
            let arg = &args[i];
            let Some(name) = arg.strip_prefix("--") else {
                return Err(CliError::Usage(format!(
                    "unexpected argument `{arg}`\n\n{help}"
                )));
            };
            if name == "help" {
                return Err(CliError::Help(help.to_string()));
            }
            if !allowed.contains(&name) {
                return Err(CliError::Usage(format!("unknown flag `--{name}`\n\n{help}")));
            }
            if SWITCHES.contains(&name) {
                switches.push(name.to_string());
                i += 1;
                continue;
            }
            let Some(value) = args.get(i + 1) else {
                return Err(CliError::Usage(format!("flag `--{name}` needs a value\n\n{help}")));
            };
            if values.insert(name.to_string(), value.clone()).is_some() {
                return Err(CliError::Usage(format!("flag `--{name}` given twice")));
            }
            i += 2;
        }
        Ok(Flags { values, switches })
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.values.get(name).map(String::as_str)
    }

    pub fn is_set(&self, name: &str) -> bool {
        self.switches.iter().any(|s| s == name)
    }

    pub fn require(&self, name: &str) -> Result<&str, CliError> {
        self.get(name)
            .ok_or_else(|| CliError::Usage(format!("missing required flag `--{name}`")))
    }

    pub fn require_parsed<T: std::str::FromStr>(&self, name: &str) -> Result<T, CliError> {
        let raw = self.require(name)?;
        raw.parse()
            .map_err(|_| CliError::Usage(format!("bad value `{raw}` for `--{name}`")))
    }

    pub fn parsed_or<T: std::str::FromStr>(&self, name: &str, default: T) -> Result<T, CliError> {
        match self.get(name) {
            None => Ok(default),
            Some(raw) => raw
                .parse()
                .map_err(|_| CliError::Usage(format!("bad value `{raw}` for `--{name}`"))),
        }
    }
}
