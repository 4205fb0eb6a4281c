use serde::de::DeserializeOwned;

use crate::error::{Error, Result};

/// Parses TOML into `T`, naming the dotted path of any offending key.
pub(crate) fn from_toml<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T> {
    let de = toml::Deserializer::parse(text).map_err(|e| Error::Parse(format!("{origin}: {}", e.message())))?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let message = e.inner().message().to_string();
        Error::Config(describe(&path, &message, origin))
    })
}

fn describe(path: &str, message: &str, origin: &str) -> String {
    if let Some(rest) = message.strip_prefix("unknown field `") {
        let key = rest.split('`').next().unwrap_or(rest);
        let full = if path.is_empty() || path == "." { key.to_string() } else { format!("{path}.{key}") };
        return format!("{origin}: unknown key: {full}");
    }
    if path.is_empty() || path == "." {
        format!("{origin}: {message}")
    } else {
        format!("{origin}: {path}: {message}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, Default, Deserialize)]
    #[serde(default, deny_unknown_fields)]
    struct Inner {
        batch_size: usize,
    }

    #[derive(Debug, Default, Deserialize)]
    #[serde(default, deny_unknown_fields)]
    struct Outer {
        train: Inner,
    }

    #[test]
    fn unknown_nested_key_is_named() {
        let err = from_toml::<Outer>("[train]\nbatch_sz = 3\n", "cfg.toml").unwrap_err().to_string();
        assert!(err.contains("unknown key: train.batch_sz"), "{err}");
    }

    #[test]
    fn type_mismatch_names_the_path() {
        let err = from_toml::<Outer>("[train]\nbatch_size = \"big\"\n", "cfg.toml").unwrap_err().to_string();
        assert!(err.contains("train.batch_size"), "{err}");
    }
}
