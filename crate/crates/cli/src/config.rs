//! Flat `key = value` config files, expanded into flags.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use crate::Failure;

const SUBCOMMANDS: [&str; 5] = ["exact", "simulate", "sweep", "histogram", "verify"];
/// Keys that select the prevalence; any of them on the command line
/// replaces all of them from the file.
const PREVALENCE_KEYS: [&str; 4] = ["q", "p", "a", "beta"];

/// Parses `key = value` lines. Blank lines and lines starting with `#` are
/// skipped; `_` in keys is read as `-`.
pub fn parse(text: &str) -> Result<Vec<(String, String)>, Failure> {
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Failure::Validation(format!("config line {}: expected key = value", i + 1)))?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() || key == "config" {
            return Err(Failure::Validation(format!("config line {}: invalid key", i + 1)));
        }
        entries.push((key, value.trim().to_string()));
    }
    Ok(entries)
}

fn flag_name(arg: &str) -> Option<&str> {
    let name = arg.strip_prefix("--")?;
    Some(name.split_once('=').map_or(name, |(k, _)| k))
}

/// Removes `--config PATH` from `args` and splices the file's entries in
/// right after the subcommand, skipping keys the command line already sets.
pub fn expand(mut args: Vec<OsString>) -> Result<Vec<OsString>, Failure> {
    let strings: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let Some(at) = strings.iter().position(|a| a == "--config" || a.starts_with("--config=")) else {
        return Ok(args);
    };
    let (path, taken) = match strings[at].strip_prefix("--config=") {
        Some(path) => (path.to_string(), 1),
        None => match strings.get(at + 1) {
            Some(path) => (path.clone(), 2),
            None => return Ok(args),
        },
    };
    let text = read(Path::new(&path))?;
    args.drain(at..at + taken);

    let given: Vec<&str> = strings.iter().filter_map(|a| flag_name(a)).collect();
    let prevalence_given = given.iter().any(|k| PREVALENCE_KEYS.contains(k));
    let mut extra = Vec::new();
    for (key, value) in parse(&text)? {
        if given.contains(&key.as_str()) || (prevalence_given && PREVALENCE_KEYS.contains(&key.as_str())) {
            continue;
        }
        match value.as_str() {
            "true" => extra.push(format!("--{key}")),
            "false" => {}
            _ => extra.push(format!("--{key}={value}")),
        }
    }
    let insert = args
        .iter()
        .position(|a| SUBCOMMANDS.iter().any(|s| a == s))
        .map_or(args.len(), |i| i + 1);
    args.splice(insert..insert, extra.into_iter().map(OsString::from));
    Ok(args)
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::Validation(format!("cannot read config {}: {e}", path.display())))
}
