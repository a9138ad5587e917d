//! `--config FILE`: a JSON object of flag defaults, keyed by long flag name.
//! Values apply only to flags absent from the command line, and never shadow
//! a flag whose environment variable is set.

use std::ffi::OsString;

use serde_json::Value;

const ENV_FLAGS: &[(&str, &str)] = &[
    ("driver", "VIZBENCH_DRIVER"),
    ("db", "VIZBENCH_DB"),
    ("pool-size", "VIZBENCH_POOL_SIZE"),
    ("timeout-ms", "VIZBENCH_TIMEOUT_MS"),
];

fn config_path(argv: &[OsString]) -> Result<Option<(usize, usize, OsString)>, String> {
    for (i, a) in argv.iter().enumerate() {
        let Some(s) = a.to_str() else { continue };
        if s == "--" {
            break;
        }
        if s == "--config" {
            let v = argv.get(i + 1).ok_or("--config needs a file")?;
            return Ok(Some((i, 2, v.clone())));
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Ok(Some((i, 1, v.into())));
        }
    }
    Ok(None)
}

fn given(user: &[OsString], flag: &str) -> bool {
    let long = format!("--{flag}");
    let eq = format!("--{flag}=");
    user.iter()
        .filter_map(|a| a.to_str())
        .any(|a| a == long || a.starts_with(&eq))
}

/// Rewrite `argv` so that config-file values appear as flags right after
/// the subcommand name.
pub fn merge_config(mut argv: Vec<OsString>, env_set: impl Fn(&str) -> bool) -> Result<Vec<OsString>, String> {
    let Some((at, len, path)) = config_path(&argv)? else {
        return Ok(argv);
    };
    argv.drain(at..at + len);
    let text = std::fs::read_to_string(&path).map_err(|e| format!("reading {}: {e}", path.to_string_lossy()))?;
    let Value::Object(map) = serde_json::from_str::<Value>(&text).map_err(|e| format!("config file: {e}"))? else {
        return Err("config file must hold a JSON object".into());
    };
    // The subcommand is the first bare word after the program name.
    let Some(sub) = argv.iter().skip(1).position(|a| !a.to_string_lossy().starts_with('-')).map(|p| p + 1) else {
        return Ok(argv);
    };
    let mut injected = Vec::new();
    for (key, value) in map {
        let flag = key.replace('_', "-");
        if given(&argv[sub + 1..], &flag) {
            continue;
        }
        if ENV_FLAGS.iter().any(|(f, env)| *f == flag && env_set(env)) {
            continue;
        }
        let values = match value {
            Value::Bool(true) => {
                injected.push(format!("--{flag}").into());
                continue;
            }
            Value::Bool(false) | Value::Null => continue,
            Value::Array(items) => items,
            other => vec![other],
        };
        for v in values {
            let text = match v {
                Value::String(s) => s,
                Value::Number(n) => n.to_string(),
                other => return Err(format!("config key `{key}`: unsupported value {other}")),
            };
            injected.push(format!("--{flag}").into());
            injected.push(text.into());
        }
    }
    argv.splice(sub + 1..sub + 1, injected);
    Ok(argv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn flags_win_over_config() {
        let dir = std::env::temp_dir().join(format!("vizbench-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.json");
        std::fs::write(&path, r#"{"driver":"duckdb","db":"x.db","pool_size":2,"verbose":true}"#).unwrap();
        let p = path.to_str().unwrap();
        let out = merge_config(args(&["vb", "--config", p, "run", "--driver", "sqlite"]), |k| k == "VIZBENCH_DB").unwrap();
        assert_eq!(out, args(&["vb", "run", "--pool-size", "2", "--verbose", "--driver", "sqlite"]));
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn untouched_without_config() {
        let a = args(&["vb", "compile", "--out", "w.jsonl"]);
        assert_eq!(merge_config(a.clone(), |_| false).unwrap(), a);
    }
}
