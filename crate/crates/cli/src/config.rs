use std::ffi::OsString;

use anyhow::{bail, Context, Result};
use serde_json::Value;

/// Replaces `--config FILE` with the flags stored in `FILE`.
///
/// The file holds a JSON object whose keys are flag names (`x_range` or
/// `x-range`). Its flags are inserted directly after the subcommand, so flags
/// given on the command line come later and win.
pub fn expand(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut rest = Vec::with_capacity(args.len());
    let mut file = None;
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            file = Some(it.next().context("--config needs a file")?);
        } else if let Some(p) = a.to_str().and_then(|s| s.strip_prefix("--config=")) {
            file = Some(OsString::from(p));
        } else {
            rest.push(a);
        }
    }
    let Some(file) = file else {
        return Ok(rest);
    };
    let text = std::fs::read_to_string(&file).with_context(|| format!("reading config {}", file.to_string_lossy()))?;
    let flags = flags_from_json(&text)?;
    let at = rest.len().min(2);
    rest.splice(at..at, flags);
    Ok(rest)
}

fn flags_from_json(text: &str) -> Result<Vec<OsString>> {
    let Value::Object(map) = serde_json::from_str(text).context("parsing config JSON")? else {
        bail!("config must be a JSON object");
    };
    let mut out = Vec::new();
    for (key, value) in map {
        let flag = format!("--{}", key.replace('_', "-"));
        let text = match value {
            Value::Bool(true) => {
                out.push(flag.into());
                continue;
            }
            Value::Bool(false) | Value::Null => continue,
            Value::String(s) => s,
            Value::Number(n) => n.to_string(),
            Value::Array(items) => items.iter().map(scalar).collect::<Result<Vec<_>>>()?.join(","),
            Value::Object(o) => serde_json::to_string(&o)?,
        };
        out.push(flag.into());
        out.push(text.into());
    }
    Ok(out)
}

fn scalar(v: &Value) -> Result<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        other => bail!("config arrays may hold only strings and numbers, got {other}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strs(v: &[OsString]) -> Vec<&str> {
        v.iter().map(|s| s.to_str().unwrap()).collect()
    }

    #[test]
    fn config_flags_go_before_command_line_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(
            &path,
            r#"{"rule": "walls", "n": 16, "x_range": [0, 1, 5], "binary": true, "pgm": null}"#,
        )
        .unwrap();
        let args = ["ips-lab", "simulate", "--n", "32", "--config", path.to_str().unwrap()]
            .map(OsString::from)
            .to_vec();
        let out = expand(args).unwrap();
        assert_eq!(
            strs(&out),
            [
                "ips-lab",
                "simulate",
                "--rule",
                "walls",
                "--n",
                "16",
                "--x-range",
                "0,1,5",
                "--binary",
                "--n",
                "32"
            ]
        );
    }

    #[test]
    fn without_config_arguments_are_unchanged() {
        let args = ["ips-lab", "criterion", "--rule", "identity"]
            .map(OsString::from)
            .to_vec();
        assert_eq!(expand(args.clone()).unwrap(), args);
        assert!(flags_from_json("[1]").is_err());
    }
}
