use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Provenance block embedded in every output.
///
/// The timestamp comes only from `SOURCE_DATE_EPOCH`, so reruns stay byte-identical.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: BTreeMap<String, String>,
    pub tool_version: String,
    pub seed: Option<u64>,
    pub timestamp: Option<String>,
}

impl RunManifest {
    pub fn new<I, K, V>(command: &str, parameters: I, seed: Option<u64>) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: ToString,
    {
        Self {
            command: command.into(),
            parameters: parameters.into_iter().map(|(k, v)| (k.into(), v.to_string())).collect(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            seed,
            timestamp: source_date_epoch(),
        }
    }
}

fn source_date_epoch() -> Option<String> {
    let secs: i64 = std::env::var("SOURCE_DATE_EPOCH").ok()?.trim().parse().ok()?;
    let t = chrono::DateTime::from_timestamp(secs, 0)?;
    Some(t.to_rfc3339_opts(chrono::SecondsFormat::Secs, true))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameters_are_sorted_strings() {
        let m = RunManifest::new("bounds", [("model", "infinite"), ("k", "1..10")], None);
        let keys: Vec<&String> = m.parameters.keys().collect();
        assert_eq!(keys, ["k", "model"]);
        assert_eq!(m.tool_version, env!("CARGO_PKG_VERSION"));
    }
}
