//! Optional TOML config file. Each `[subcommand]` table supplies default flag
//! values; any flag also given on the command line is left alone.
//!
//! ```toml
//! [select]
//! method = "muss"
//! k = 50
//! sigma-sweep = true
//!
//! [bench]
//! methods = ["mmr", "muss"]
//! ```

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use crate::args::Command;
use crate::error::{CliError, Result};

fn config_path(argv: &[OsString]) -> Option<PathBuf> {
    let mut it = argv.iter();
    while let Some(arg) = it.next() {
        let s = arg.to_string_lossy();
        if s == "--" {
            break;
        }
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(v));
        }
    }
    None
}

fn flag_name(arg: &str) -> Option<&str> {
    let body = arg.strip_prefix("--")?;
    Some(body.split_once('=').map_or(body, |(name, _)| name))
}

fn scalar(key: &str, v: &toml::Value) -> Result<String> {
    match v {
        toml::Value::String(s) => Ok(s.clone()),
        toml::Value::Integer(i) => Ok(i.to_string()),
        toml::Value::Float(f) => Ok(f.to_string()),
        _ => Err(CliError::usage(format!("config key {key:?}: unsupported value {v}"))),
    }
}

/// Flags for `command` from the config table, skipping any in `present`.
pub fn flags_from_table(table: &toml::Table, present: &[String]) -> Result<Vec<OsString>> {
    let mut out = Vec::new();
    for (key, value) in table {
        let flag = key.replace('_', "-");
        if present.contains(&flag) {
            continue;
        }
        match value {
            toml::Value::Boolean(true) => out.push(format!("--{flag}").into()),
            toml::Value::Boolean(false) => {}
            toml::Value::Array(items) => {
                let parts = items.iter().map(|v| scalar(key, v)).collect::<Result<Vec<_>>>()?;
                out.push(format!("--{flag}").into());
                out.push(parts.join(",").into());
            }
            other => {
                out.push(format!("--{flag}").into());
                out.push(scalar(key, other)?.into());
            }
        }
    }
    Ok(out)
}

fn load_table(path: &Path) -> Result<toml::Table> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    text.parse::<toml::Table>()
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

/// Returns `argv` with config-file defaults inserted right after the
/// subcommand name. Without `--config` the arguments are returned unchanged.
pub fn apply_config(argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let table = load_table(&path)?;
    let Some(pos) = argv.iter().position(|a| Command::NAMES.contains(&a.to_string_lossy().as_ref())) else {
        return Ok(argv);
    };
    let command = argv[pos].to_string_lossy().into_owned();
    let section = match table.get(&command) {
        None => return Ok(argv),
        Some(toml::Value::Table(t)) => t,
        Some(_) => return Err(CliError::usage(format!("config: [{command}] must be a table"))),
    };
    let present: Vec<String> =
        argv[pos + 1..].iter().filter_map(|a| flag_name(&a.to_string_lossy()).map(str::to_owned)).collect();
    let injected = flags_from_table(section, &present)?;
    let mut out = argv[..=pos].to_vec();
    out.extend(injected);
    out.extend_from_slice(&argv[pos + 1..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(args: &[&str]) -> Vec<OsString> {
        args.iter().map(OsString::from).collect()
    }

    #[test]
    fn table_to_flags() {
        let table: toml::Table =
            "k = 5\nlambda_c = 0.25\nmethods = [\"mmr\", \"muss\"]\nsigma-sweep = true\nno-normalize = false\n"
                .parse()
                .unwrap();
        let flags = flags_from_table(&table, &["k".into()]).unwrap();
        let flags: Vec<String> = flags.into_iter().map(|f| f.into_string().unwrap()).collect();
        assert_eq!(flags, ["--lambda-c", "0.25", "--methods", "mmr,muss", "--sigma-sweep"]);
    }

    #[test]
    fn command_line_wins() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "[select]\nk = 5\nmethod = \"topk\"\n[gen]\nn = 3\n").unwrap();
        let argv = os(&["muss", "--config", path.to_str().unwrap(), "select", "--k=9", "--input", "x"]);
        let out = apply_config(argv).unwrap();
        let out: Vec<String> = out.into_iter().map(|f| f.into_string().unwrap()).collect();
        assert_eq!(&out[3..], ["select", "--method", "topk", "--k=9", "--input", "x"]);
    }

    #[test]
    fn no_config_is_identity() {
        let argv = os(&["muss", "select", "--k", "1"]);
        assert_eq!(apply_config(argv.clone()).unwrap(), argv);
    }

    #[test]
    fn nested_values_rejected() {
        let table: toml::Table = "x = { a = 1 }".parse().unwrap();
        assert!(flags_from_table(&table, &[]).is_err());
    }
}
