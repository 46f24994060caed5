//! `--config file.json`: the same options as the flags, as a JSON object.
//!
//! Keys are long flag names (`two-ell-max` or `two_ell_max`); an optional
//! `"subcommand"` key picks the subcommand when none is given. Flags on the
//! command line win over the file.

use std::ffi::OsString;

use anyhow::{bail, Context, Result};
use serde_json::Value;

pub const SUBCOMMANDS: [&str; 8] = ["symbol", "spectrum", "dioph", "poincare-check", "solvable", "solve", "tube", "tube-reduce"];

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
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

fn render(v: &Value) -> Result<Option<String>> {
    Ok(match v {
        Value::Null | Value::Bool(false) => None,
        Value::Bool(true) => Some(String::new()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        Value::Array(items) => {
            let parts = items.iter().map(|x| render(x).map(Option::unwrap_or_default)).collect::<Result<Vec<_>>>()?;
            Some(parts.join(","))
        }
        Value::Object(_) => bail!("nested objects are not valid option values"),
    })
}

/// Command line with the config file's options spliced in after the
/// subcommand.
pub fn expand(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&args) else { return Ok(args) };
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading config {}", path.to_string_lossy()))?;
    let cfg: Value = serde_json::from_str(&text).map_err(lie_poincare::Error::from).context("parsing config")?;
    let Value::Object(map) = cfg else { bail!("config must be a JSON object") };

    let mut args = args;
    let mut pos = args.iter().position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref()));
    if pos.is_none() {
        if let Some(Value::String(sub)) = map.get("subcommand") {
            if !SUBCOMMANDS.contains(&sub.as_str()) {
                bail!("unknown subcommand {sub:?} in config");
            }
            args.push(sub.into());
            pos = Some(args.len() - 1);
        }
    }
    let Some(pos) = pos else { return Ok(args) };

    let present = |flag: &str| args.iter().any(|a| {
        let s = a.to_string_lossy();
        s == flag || s.starts_with(&format!("{flag}="))
    });
    let mut extra: Vec<OsString> = Vec::new();
    for (key, value) in &map {
        if key == "subcommand" || key == "config" {
            continue;
        }
        let flag = format!("--{}", key.replace('_', "-"));
        if present(&flag) {
            continue;
        }
        match render(value).with_context(|| format!("config key {key:?}"))? {
            None => {}
            Some(v) if v.is_empty() && matches!(value, Value::Bool(true)) => extra.push(flag.into()),
            Some(v) => extra.push(format!("{flag}={v}").into()),
        }
    }
    args.splice(pos + 1..pos + 1, extra);
    Ok(args)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn splices_after_subcommand_and_respects_flags() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, r#"{{"delta": 2, "alpha": [1, "phi"], "radius": 100, "mean_zero_only": true, "trials": null}}"#).unwrap();
        let p = f.path().to_str().unwrap();
        let out = expand(os(&["lie-poincare", "--config", p, "poincare-check", "--radius", "5"])).unwrap();
        let s: Vec<String> = out.iter().map(|a| a.to_string_lossy().into_owned()).collect();
        assert_eq!(&s[..4], &["lie-poincare", "--config", p, "poincare-check"]);
        assert!(s.contains(&"--delta=2".to_string()));
        assert!(s.contains(&"--alpha=1,phi".to_string()));
        assert!(s.contains(&"--mean-zero-only".to_string()));
        assert!(!s.iter().any(|a| a.starts_with("--radius=")));
        assert!(!s.iter().any(|a| a.starts_with("--trials")));
    }

    #[test]
    fn subcommand_from_config() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, r#"{{"subcommand": "dioph", "alpha": "1,phi"}}"#).unwrap();
        let p = f.path().to_str().unwrap();
        let s: Vec<String> = expand(os(&["x", "--config", p])).unwrap().iter().map(|a| a.to_string_lossy().into_owned()).collect();
        assert_eq!(s[3], "dioph");
        assert_eq!(s[4], "--alpha=1,phi");
    }

    #[test]
    fn malformed_config_reports_position() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, "{{\"delta\": 2,\n \"radius\": }}").unwrap();
        let err = expand(os(&["x", "--config", f.path().to_str().unwrap(), "dioph"])).unwrap_err();
        assert!(format!("{err:#}").contains("line 2"), "{err:#}");
    }
}
