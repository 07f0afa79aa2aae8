//! `--config FILE` support: a JSON object whose keys are flag names. Its
//! entries are spliced in right after the subcommand, so flags given on the
//! command line take precedence.

use std::ffi::OsString;

use serde_json::Value;

use crate::output::CliError;

pub fn expand_config(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut path = None;
    let mut iter = argv.into_iter();
    while let Some(arg) = iter.next() {
        let s = arg.to_string_lossy();
        if s == "--config" {
            let p = iter
                .next()
                .ok_or_else(|| CliError::Usage("--config needs a file path".into()))?;
            path = Some(p);
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(OsString::from(p));
        } else {
            rest.push(arg);
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.to_string_lossy())))?;
    let spliced = config_args(&text)?;
    if rest.len() < 2 {
        return Err(CliError::Usage("--config needs a subcommand".into()));
    }
    let tail = rest.split_off(2);
    rest.extend(spliced);
    rest.extend(tail);
    Ok(rest)
}

/// Converts `{"n": 40, "g_hat": 0.25, "exact": true}` into
/// `--n 40 --g-hat 0.25 --exact`.
pub fn config_args(text: &str) -> Result<Vec<OsString>, CliError> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("config is not valid JSON: {e}")))?;
    let Value::Object(map) = value else {
        return Err(CliError::Usage("config must be a JSON object".into()));
    };
    let mut out = Vec::new();
    for (key, v) in map {
        let flag = format!("--{}", key.replace('_', "-"));
        let scalar = |v: &Value| -> Result<String, CliError> {
            match v {
                Value::String(s) => Ok(s.clone()),
                Value::Number(n) => Ok(n.to_string()),
                Value::Bool(b) => Ok(b.to_string()),
                _ => Err(CliError::Usage(format!("config key '{key}' has an unsupported value"))),
            }
        };
        match &v {
            Value::Bool(true) => out.push(flag.into()),
            Value::Bool(false) | Value::Null => {}
            Value::Array(items) => {
                let joined = items.iter().map(scalar).collect::<Result<Vec<_>, _>>()?.join(",");
                out.push(flag.into());
                out.push(joined.into());
            }
            other => {
                out.push(flag.into());
                out.push(scalar(other)?.into());
            }
        }
    }
    Ok(out)
}
