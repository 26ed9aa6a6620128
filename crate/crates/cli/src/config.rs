//! `--config` files.
//!
//! A config file holds `key = value` lines with the same keys as the long
//! flags; `#` starts a comment. A result file written by an earlier run is
//! accepted too: its header supplies the parameters, which reproduces that
//! run. Flags given on the command line take precedence over file values.

use std::collections::HashSet;

use clap::{ArgAction, Command};
use heatchan::output;

use crate::error::{usage, CliError};

fn flag_value(argv: &[String], name: &str) -> Option<String> {
    let long = format!("--{name}");
    let prefix = format!("--{name}=");
    argv.iter().enumerate().find_map(|(i, a)| {
        if *a == long {
            argv.get(i + 1).cloned()
        } else {
            a.strip_prefix(&prefix).map(str::to_string)
        }
    })
}

fn parse_entries(text: &str, subcommand: &str) -> Result<(Vec<(String, String)>, bool), CliError> {
    let first = text.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or_default();
    let is_result = first.starts_with('{') || (first.starts_with('#') && first.contains('='));
    if is_result {
        let table = output::parse_table(text).map_err(|e| usage(format!("--config: {e}")))?;
        if let Some(cmd) = table.header_value("command") {
            if cmd != subcommand {
                return Err(usage(format!("--config: result file was written by `{cmd}`, not `{subcommand}`")));
            }
        }
        return Ok((table.header, true));
    }
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or_default().trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("--config: line {} is not `key = value`", i + 1)))?;
        entries.push((k.trim().trim_start_matches("--").to_string(), v.trim().to_string()));
    }
    Ok((entries, false))
}

/// Appends the flags of the `--config` file that `argv` does not set.
pub fn merge(argv: Vec<String>, root: &Command) -> Result<Vec<String>, CliError> {
    let Some(path) = flag_value(&argv, "config") else {
        return Ok(argv);
    };
    let Some(sub) = argv.get(1).and_then(|s| root.find_subcommand(s)) else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| usage(format!("--config: cannot read {path}: {e}")))?;
    let (entries, from_result) = parse_entries(&text, sub.get_name())?;

    let present: HashSet<String> = argv
        .iter()
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap_or_default().to_string())
        .collect();
    // every group declared by the subcommands is a choose-one group
    let long_of = |id: &clap::Id| {
        sub.get_arguments()
            .find(|a| a.get_id() == id)
            .and_then(|a| a.get_long())
            .map(str::to_string)
    };
    let exclusive: Vec<Vec<String>> = sub
        .get_groups()
        .map(|g| g.get_args().filter_map(long_of).collect())
        .collect();
    let mut present = present;
    let mut out = argv;
    for (key, value) in entries {
        let Some(arg) = sub.get_arguments().find(|a| a.get_long() == Some(key.as_str())) else {
            if from_result {
                continue;
            }
            return Err(usage(format!("--config: unknown key `{key}` for `{}`", sub.get_name())));
        };
        let rival_set = exclusive
            .iter()
            .filter(|g| g.contains(&key))
            .any(|g| g.iter().any(|m| *m != key && present.contains(m)));
        if key == "config" || present.contains(&key) || rival_set {
            continue;
        }
        present.insert(key.clone());
        if matches!(arg.get_action(), ArgAction::SetTrue) {
            match value.as_str() {
                "true" | "1" | "yes" => out.push(format!("--{key}")),
                "false" | "0" | "no" => {}
                other => return Err(usage(format!("--config: `{key}` expects true or false, got `{other}`"))),
            }
        } else {
            out.push(format!("--{key}={value}"));
        }
    }
    Ok(out)
}
