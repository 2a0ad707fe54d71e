//! Minimal flag parser with strict validation.

use std::collections::{BTreeMap, BTreeSet};

use crate::CliError;

#[derive(Clone, Copy, PartialEq)]
pub enum Kind {
    /// Boolean switch, no value.
    Switch,
    /// Takes exactly one value; last occurrence wins.
    Single,
    /// May repeat; each occurrence takes one value.
    Multi,
    /// Greedy: consumes every following argument until the next flag.
    Rest,
}

pub struct Flag {
    pub name: &'static str,
    pub kind: Kind,
}

pub const fn flag(name: &'static str, kind: Kind) -> Flag {
    Flag { name, kind }
}

pub struct ParsedArgs {
    values: BTreeMap<String, Vec<String>>,
    switches: BTreeSet<String>,
}

impl ParsedArgs {
    pub fn parse(argv: &[String], spec: &[Flag]) -> Result<Self, CliError> {
        let mut values: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let mut switches = BTreeSet::new();
        let mut i = 0;
        while i < argv.len() {
            let raw = &argv[i];
            let Some(name) = raw.strip_prefix("--") else {
                return Err(CliError::usage(format!("unexpected argument {raw:?}")));
            };
            let Some(f) = spec.iter().find(|f| f.name == name) else {
                return Err(CliError::usage(format!("unknown flag --{name}")));
            };
            match f.kind {
                Kind::Switch => {
                    switches.insert(name.to_string());
                    i += 1;
                }
                Kind::Single | Kind::Multi => {
                    let Some(value) = argv.get(i + 1) else {
                        return Err(CliError::usage(format!("--{name} needs a value")));
                    };
                    values.entry(name.to_string()).or_default().push(value.clone());
                    i += 2;
                }
                Kind::Rest => {
                    let mut consumed = 0;
                    for v in &argv[i + 1..] {
                        if v.starts_with("--") {
                            break;
                        }
                        values.entry(name.to_string()).or_default().push(v.clone());
                        consumed += 1;
                    }
                    if consumed == 0 {
                        return Err(CliError::usage(format!("--{name} needs at least one value")));
                    }
                    i += 1 + consumed;
                }
            }
        }
        Ok(ParsedArgs { values, switches })
    }

    pub fn has(&self, name: &str) -> bool {
        self.switches.contains(name)
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.values.get(name).and_then(|v| v.last()).map(String::as_str)
    }

    pub fn get_all(&self, name: &str) -> &[String] {
        self.values.get(name).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn require(&self, name: &str) -> Result<&str, CliError> {
        self.get(name).ok_or_else(|| CliError::usage(format!("missing required flag --{name}")))
    }

    pub fn parse_f64(&self, name: &str) -> Result<Option<f64>, CliError> {
        self.get(name)
            .map(|v| v.parse::<f64>().map_err(|_| CliError::usage(format!("--{name}: bad number {v:?}"))))
            .transpose()
    }

    pub fn parse_usize(&self, name: &str) -> Result<Option<usize>, CliError> {
        self.get(name)
            .map(|v| v.parse::<usize>().map_err(|_| CliError::usage(format!("--{name}: bad integer {v:?}"))))
            .transpose()
    }

    pub fn parse_u64(&self, name: &str) -> Result<Option<u64>, CliError> {
        self.get(name)
            .map(|v| v.parse::<u64>().map_err(|_| CliError::usage(format!("--{name}: bad integer {v:?}"))))
            .transpose()
    }
}
