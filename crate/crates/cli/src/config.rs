//! Optional `key=value` config file. Keys are long flag names, with `_` and
//! `-` interchangeable. Entries become flags placed before the ones typed on
//! the command line, so typed flags win.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::CommandFactory;

use crate::error::{CliError, CliResult};
use crate::Cli;

/// Parses config text. Blank lines and lines starting with `#` are skipped.
pub fn parse_config(text: &str) -> CliResult<Vec<(usize, String, String)>> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", i + 1)))?;
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(CliError::Usage(format!("config line {}: empty key", i + 1)));
        }
        entries.push((i + 1, key, v.trim().to_string()));
    }
    Ok(entries)
}

/// Removes `--config PATH` from `args` and returns the path.
fn take_config_flag(args: &mut Vec<OsString>) -> CliResult<Option<PathBuf>> {
    let mut found = None;
    let mut i = 1;
    while i < args.len() {
        let arg = args[i].to_string_lossy().into_owned();
        if arg == "--" {
            break;
        }
        if arg == "--config" {
            if i + 1 >= args.len() {
                return Err(CliError::Usage("--config needs a path".into()));
            }
            found = Some(PathBuf::from(args.remove(i + 1)));
            args.remove(i);
        } else if let Some(path) = arg.strip_prefix("--config=") {
            found = Some(PathBuf::from(path));
            args.remove(i);
        } else {
            i += 1;
        }
    }
    Ok(found)
}

/// Expands `--config` into flags for the chosen subcommand. Keys belonging to
/// another subcommand are ignored so one file can serve them all.
pub fn splice_config(mut args: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let Some(path) = take_config_flag(&mut args)? else {
        return Ok(args);
    };
    let text = fs::read_to_string(&path).map_err(|e| CliError::io(path.display(), e))?;
    let entries = parse_config(&text)?;

    let command = Cli::command();
    let Some(sub_pos) = args.iter().skip(1).position(|a| !a.to_string_lossy().starts_with('-')).map(|p| p + 1) else {
        return Ok(args);
    };
    let sub_name = args[sub_pos].to_string_lossy().into_owned();
    let Some(sub) = command.find_subcommand(&sub_name) else {
        return Ok(args);
    };
    let longs = |c: &clap::Command| c.get_arguments().filter_map(|a| a.get_long().map(str::to_string)).collect::<Vec<_>>();
    let own = longs(sub);
    let any: Vec<String> = command.get_subcommands().flat_map(longs).collect();

    let mut flags = Vec::new();
    for (line, key, value) in entries {
        if own.contains(&key) {
            flags.push(OsString::from(format!("--{key}")));
            flags.push(OsString::from(value));
        } else if !any.contains(&key) {
            return Err(CliError::Usage(format!("{} line {line}: unknown key {key:?}", path.display())));
        }
    }
    args.splice(sub_pos + 1..sub_pos + 1, flags);
    Ok(args)
}
