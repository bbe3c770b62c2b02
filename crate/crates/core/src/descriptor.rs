//! `key=value` descriptor strings shared by aggregator and attack specs.
//!
//! Pairs are separated by whitespace or `;`; list values use commas,
//! e.g. `kind=adaptive set=0.1,0.5,1,10`.

use std::collections::BTreeMap;

use crate::error::{invalid, Error, Result};

#[derive(Debug, Default)]
pub(crate) struct Pairs {
    map: BTreeMap<String, String>,
}

impl Pairs {
    pub(crate) fn parse(text: &str) -> Result<Pairs> {
        let mut map = BTreeMap::new();
        for token in text.split(|c: char| c.is_whitespace() || c == ';').filter(|t| !t.is_empty()) {
            let Some((key, value)) = token.split_once('=') else {
                return invalid(format!("expected key=value, found {token:?}"));
            };
            let key = key.trim().to_ascii_lowercase();
            if key.is_empty() {
                return invalid(format!("empty key in {token:?}"));
            }
            if map.insert(key.clone(), value.trim().to_string()).is_some() {
                return invalid(format!("duplicate key {key:?}"));
            }
        }
        Ok(Pairs { map })
    }

    pub(crate) fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key)
    }

    pub(crate) fn require(&mut self, key: &str) -> Result<String> {
        self.take(key).ok_or_else(|| Error::InvalidInput(format!("missing key {key:?}")))
    }

    pub(crate) fn real(&mut self, key: &str) -> Result<Option<f64>> {
        self.take(key).map(|v| parse_real(key, &v)).transpose()
    }

    pub(crate) fn count(&mut self, key: &str) -> Result<Option<usize>> {
        self.take(key)
            .map(|v| {
                v.parse::<usize>()
                    .map_err(|_| Error::InvalidInput(format!("{key}: not a nonnegative integer: {v:?}")))
            })
            .transpose()
    }

    pub(crate) fn reals(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        self.take(key)
            .map(|v| v.split(',').filter(|s| !s.is_empty()).map(|s| parse_real(key, s)).collect())
            .transpose()
    }

    /// Fails if any key was not consumed.
    pub(crate) fn finish(self) -> Result<()> {
        match self.map.keys().next() {
            Some(k) => invalid(format!("unknown key {k:?}")),
            None => Ok(()),
        }
    }
}

fn parse_real(key: &str, v: &str) -> Result<f64> {
    match v.trim().parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => invalid(format!("{key}: not a finite number: {v:?}")),
    }
}
