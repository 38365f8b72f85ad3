//! Plain-text configuration files: one `key = value` per line, `#`
//! starts a comment, unknown and duplicate keys are errors.
//!
//! This module holds the format-level primitives; the experiment and
//! scenario schemas layer their own key validation on top.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::error::ConfigError;

/// Parses the raw pairs in file order. Rejects lines without `=` and
/// duplicate keys; does not validate key names.
pub fn parse_kv_map(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let Some(eq) = line.find('=') else {
            return Err(ConfigError::Malformed {
                line: idx + 1,
                reason: "expected `key = value`".to_string(),
            });
        };
        let key = line[..eq].trim();
        let value = line[eq + 1..].trim();
        if key.is_empty() {
            return Err(ConfigError::Malformed {
                line: idx + 1,
                reason: "empty key".to_string(),
            });
        }
        if value.is_empty() {
            return Err(ConfigError::Malformed {
                line: idx + 1,
                reason: format!("key `{key}` has no value"),
            });
        }
        if map.insert(key.to_string(), value.to_string()).is_some() {
            return Err(ConfigError::DuplicateKey(key.to_string()));
        }
    }
    Ok(map)
}

pub fn read_kv_file(path: &Path) -> Result<BTreeMap<String, String>, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Unreadable(format!("{}: {e}", path.display())))?;
    parse_kv_map(&text)
}

/// Parses one scalar value, turning the parse error into a config error
/// that names the key.
pub fn parse_value<T>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T: FromStr,
    T::Err: Display,
{
    value.parse().map_err(|e| ConfigError::InvalidValue {
        key: key.to_string(),
        reason: format!("`{value}`: {e}"),
    })
}

/// Parses a comma-separated list of reals, e.g. `0.7,0.2,0.1`.
pub fn parse_f64_list(key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    value
        .split(',')
        .map(|part| parse_value::<f64>(key, part.trim()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_comments_and_blanks() {
        let text = "# top comment\na = 1\n\nb = two words  # trailing\n  c=3\n";
        let map = parse_kv_map(text).unwrap();
        assert_eq!(map.len(), 3);
        assert_eq!(map["a"], "1");
        assert_eq!(map["b"], "two words");
        assert_eq!(map["c"], "3");
    }

    #[test]
    fn values_may_contain_equals_signs() {
        let map = parse_kv_map("expr = a=b\n").unwrap();
        assert_eq!(map["expr"], "a=b");
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(matches!(
            parse_kv_map("just words\n"),
            Err(ConfigError::Malformed { line: 1, .. })
        ));
        assert!(matches!(
            parse_kv_map("a = 1\n= 2\n"),
            Err(ConfigError::Malformed { line: 2, .. })
        ));
        assert!(matches!(
            parse_kv_map("a =\n"),
            Err(ConfigError::Malformed { line: 1, .. })
        ));
        assert!(matches!(
            parse_kv_map("a = 1\na = 2\n"),
            Err(ConfigError::DuplicateKey(_))
        ));
    }

    #[test]
    fn typed_parsers_name_the_offending_key() {
        assert_eq!(parse_value::<u32>("k", "5").unwrap(), 5);
        let err = parse_value::<u32>("k_regions", "many").unwrap_err();
        assert!(err.to_string().contains("k_regions"));
        assert_eq!(
            parse_f64_list("m", "0.7, 0.2,0.1").unwrap(),
            vec![0.7, 0.2, 0.1]
        );
        assert!(parse_f64_list("m", "0.7,,0.1").is_err());
    }
}
