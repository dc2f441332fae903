//! Flat `key = value` configuration files.
//!
//! Each entry becomes the flag `--key=value` inserted right after the
//! subcommand name, unless the same flag was given on the command line.
//! `true` turns a switch on and `false` leaves it off.

use std::ffi::OsString;
use std::path::Path;

const GLOBAL_WITH_VALUE: [&str; 4] = ["--seed", "--threads", "--config", "--log-level"];

pub const SUBCOMMANDS: [&str; 7] = [
    "illum-set",
    "calibrate-synth",
    "generate",
    "estimate",
    "evaluate",
    "reduce-experiment",
    "benchmark",
];

#[derive(Debug)]
pub enum ConfigError {
    Io(String),
    Usage(String),
}

#[derive(Debug)]
pub struct Merged {
    pub args: Vec<OsString>,
    /// Entries read from the config file, in file order.
    pub file_entries: Vec<(String, String)>,
}

pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key = value", n + 1))?;
        let k = k.trim().replace('_', "-");
        if k.is_empty() || k.starts_with('-') {
            return Err(format!("config line {}: bad key {k:?}", n + 1));
        }
        out.push((k, v.trim().to_string()));
    }
    Ok(out)
}

fn config_path(argv: &[OsString]) -> Option<OsString> {
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(p.into());
        }
    }
    None
}

fn subcommand_position(argv: &[OsString]) -> Option<usize> {
    let mut i = 1;
    while i < argv.len() {
        let s = argv[i].to_string_lossy();
        if GLOBAL_WITH_VALUE.contains(&s.as_ref()) {
            i += 2;
            continue;
        }
        if SUBCOMMANDS.contains(&s.as_ref()) {
            return Some(i);
        }
        i += 1;
    }
    None
}

fn given_on_command_line(argv: &[OsString], key: &str) -> bool {
    let flag = format!("--{key}");
    let prefix = format!("--{key}=");
    argv.iter().any(|a| {
        let s = a.to_string_lossy();
        s == flag || s.starts_with(&prefix)
    })
}

pub fn merge_config(argv: Vec<OsString>) -> Result<Merged, ConfigError> {
    let Some(path) = config_path(&argv) else {
        return Ok(Merged {
            args: argv,
            file_entries: Vec::new(),
        });
    };
    let path = Path::new(&path);
    let text =
        std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
    let entries = parse_config(&text).map_err(|e| ConfigError::Usage(format!("{}: {e}", path.display())))?;
    let mut extra = Vec::new();
    for (k, v) in &entries {
        if k == "config" || given_on_command_line(&argv, k) {
            continue;
        }
        match v.as_str() {
            "true" => extra.push(OsString::from(format!("--{k}"))),
            "false" => {}
            _ => extra.push(OsString::from(format!("--{k}={v}"))),
        }
    }
    let at = subcommand_position(&argv).map_or(argv.len(), |i| i + 1);
    let mut args = argv;
    args.splice(at..at, extra);
    Ok(Merged {
        args,
        file_entries: entries,
    })
}
