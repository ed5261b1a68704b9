//! `--config` defaults and resolved-configuration snapshots.
//!
//! A config file holds `key = value` lines keyed by long flag names (`-` or
//! `_`), `#` comments allowed. Keys the chosen subcommand does not take are
//! skipped so one file can drive the whole pipeline; keys no subcommand
//! takes are an error. Flags on the command line win.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::{ArgAction, ArgMatches, Command, CommandFactory};

use crate::Cli;

/// File name of the snapshot written next to directory outputs.
pub const SNAPSHOT_FILE: &str = "run_config.txt";

fn parse(text: &str, path: &Path) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("{} line {}: expected key = value", path.display(), i + 1);
        };
        pairs.push((k.trim().replace('_', "-"), v.trim().to_string()));
    }
    Ok(pairs)
}

fn flag_value<'a>(argv: &'a [String], long: &str) -> Option<&'a str> {
    let flag = format!("--{long}");
    let eq = format!("--{long}=");
    argv.iter().enumerate().find_map(|(i, a)| {
        if *a == flag {
            argv.get(i + 1).map(String::as_str)
        } else {
            a.strip_prefix(&eq)
        }
    })
}

fn on_command_line(argv: &[String], long: &str) -> bool {
    let flag = format!("--{long}");
    argv.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}=")))
}

fn known_anywhere(cmd: &Command, long: &str) -> bool {
    let here = cmd.get_arguments().any(|a| a.get_long() == Some(long));
    here || cmd.get_subcommands().any(|s| known_anywhere(s, long))
}

/// `argv` with the config file's defaults appended for the chosen
/// subcommand.
pub fn resolve(argv: &[String]) -> Result<Vec<String>> {
    let Some(path) = flag_value(argv, "config") else {
        return Ok(argv.to_vec());
    };
    let path = Path::new(path);
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let pairs = parse(&text, path)?;
    let root = Cli::command();
    let Some(sub) = argv.iter().skip(1).find_map(|a| root.find_subcommand(a)) else {
        return Ok(argv.to_vec());
    };
    let mut out = argv.to_vec();
    for (key, value) in pairs {
        if key == "config" || !known_anywhere(&root, &key) {
            bail!("{}: unknown key {key:?}", path.display());
        }
        let arg = sub.get_arguments().chain(root.get_arguments()).find(|a| a.get_long() == Some(key.as_str()));
        let Some(arg) = arg else { continue };
        if on_command_line(argv, &key) {
            continue;
        }
        match arg.get_action() {
            ArgAction::SetTrue => match value.as_str() {
                "true" => out.push(format!("--{key}")),
                "false" => {}
                other => bail!("{}: {key} must be true or false, got {other:?}", path.display()),
            },
            _ => out.push(format!("--{key}={value}")),
        }
    }
    Ok(out)
}

/// Every flag of the chosen subcommand with its resolved value, as config
/// lines.
pub fn snapshot(matches: &ArgMatches) -> String {
    let root = Cli::command();
    let Some((name, sub_matches)) = matches.subcommand() else {
        return String::new();
    };
    let sub = root.find_subcommand(name).expect("parsed subcommand exists");
    let mut text = format!("# qutrit {name}\n");
    for arg in sub.get_arguments().chain(root.get_arguments()) {
        let id = arg.get_id().as_str();
        let Some(long) = arg.get_long() else { continue };
        if matches!(long, "config" | "help" | "version" | "verbose") {
            continue;
        }
        if let Ok(Some(raw)) = sub_matches.try_get_raw(id) {
            let values: Vec<String> = raw.map(|v| v.to_string_lossy().into_owned()).collect();
            text.push_str(&format!("{long} = {}\n", values.join(",")));
        }
    }
    text
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn config_fills_missing_flags_only() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.txt");
        fs::write(&cfg, "# shared\nper_class = 4\nseed = 9\nexpand = true\nbudget = 3\nworkers = 2\n").unwrap();
        let argv = args(&format!("qutrit --config {} generate --seed 5 --out d", cfg.display()));
        let out = resolve(&argv).unwrap();
        assert!(out.contains(&"--per-class=4".to_string()));
        assert!(out.contains(&"--workers=2".to_string()));
        assert!(!out.iter().any(|a| a == "--seed=9" || a == "--expand" || a.starts_with("--budget")));

        let argv = args(&format!("qutrit featurize --config={} --in a --out b", cfg.display()));
        assert!(resolve(&argv).unwrap().contains(&"--expand".to_string()));
    }

    #[test]
    fn unknown_and_malformed_keys_are_errors() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.txt");
        fs::write(&cfg, "per-clas = 4\n").unwrap();
        let argv = args(&format!("qutrit --config {} generate", cfg.display()));
        assert!(resolve(&argv).unwrap_err().to_string().contains("per-clas"));
        fs::write(&cfg, "seed 4\n").unwrap();
        assert!(resolve(&argv).unwrap_err().to_string().contains("line 1"));
    }

    #[test]
    fn snapshot_lists_resolved_values() {
        let m = Cli::command().get_matches_from(args("qutrit split --in a --out b --seed 3"));
        let s = snapshot(&m);
        assert!(s.starts_with("# qutrit split\n"));
        for line in ["in = a", "out = b", "train = 0.8", "seed = 3"] {
            assert!(s.lines().any(|l| l == line), "{line} missing from\n{s}");
        }
    }
}
