//! `key = value` config files merged under command-line flags.
//!
//! Keys are long flag names (`learning-rate` or `learning_rate`). A key is
//! applied only when the flag was not given on the command line, which
//! yields the precedence flags > config file > environment > defaults.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use clap::parser::ValueSource;
use clap::{ArgAction, ArgMatches, Command};

use crate::CliError;

/// Parses the file into ordered `(key, value)` pairs. Blank lines and lines
/// starting with `#` are skipped.
pub fn read_entries(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::usage(format!(
                "{}:{}: expected key = value",
                path.display(),
                i + 1
            ))
        })?;
        let key = key.trim().replace('_', "-");
        let value = value.trim().trim_matches('"').to_string();
        if key.is_empty() {
            return Err(CliError::usage(format!(
                "{}:{}: empty key",
                path.display(),
                i + 1
            )));
        }
        entries.push((key, value));
    }
    Ok(entries)
}

/// Extra arguments that apply the config entries not overridden on the
/// command line. Keys that belong to another subcommand are ignored; keys
/// no subcommand knows are errors.
pub fn merge_args(
    root: &Command,
    matches: &ArgMatches,
    entries: &[(String, String)],
) -> Result<Vec<OsString>, CliError> {
    let Some((sub_name, sub_matches)) = matches.subcommand() else {
        return Ok(Vec::new());
    };
    let sub = root
        .find_subcommand(sub_name)
        .expect("parsed subcommand exists");
    let mut extra = Vec::new();
    for (key, value) in entries {
        if key == "config" {
            return Err(CliError::usage(
                "a config file cannot name another config file",
            ));
        }
        let by_long = |cmd: &Command| {
            cmd.get_arguments()
                .find(|a| a.get_long() == Some(key.as_str()))
                .cloned()
        };
        let arg = match by_long(sub).or_else(|| by_long(root)) {
            Some(a) => a,
            None if root.get_subcommands().any(|c| by_long(c).is_some()) => continue,
            None => return Err(CliError::usage(format!("unknown config key '{key}'"))),
        };
        let id = arg.get_id().as_str();
        let on_command_line = [sub_matches, matches].iter().any(|m| {
            m.try_get_raw(id).ok().flatten().is_some()
                && m.value_source(id) == Some(ValueSource::CommandLine)
        });
        if on_command_line {
            continue;
        }
        if matches!(arg.get_action(), ArgAction::SetTrue) {
            match value.as_str() {
                "true" | "1" | "yes" => extra.push(format!("--{key}").into()),
                "false" | "0" | "no" => {}
                other => {
                    return Err(CliError::usage(format!(
                        "config key '{key}' expects true or false, got '{other}'"
                    )))
                }
            }
        } else {
            extra.push(format!("--{key}={value}").into());
        }
    }
    Ok(extra)
}
