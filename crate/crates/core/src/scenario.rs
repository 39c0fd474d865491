//! Scenario files: a surface pair, named connections and divisors, options.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::connection::{ExpConnection, Monomial, DEFAULT_MAX_BLOWUPS};
use crate::geometry::{DivisorOnX, SurfacePair};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummandSpec {
    pub rank: u32,
    #[serde(default)]
    pub exponents: BTreeMap<String, i64>,
    pub coeff: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectionSpec {
    pub summands: Vec<SummandSpec>,
}

impl ConnectionSpec {
    pub fn build(&self) -> ExpConnection {
        ExpConnection::from_monomials(self.summands.iter().map(|s| {
            (
                s.rank,
                Monomial::new(s.exponents.iter().map(|(c, e)| (c.as_str(), *e)), &s.coeff),
            )
        }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Options {
    pub probe_depth: usize,
    pub max_blowups: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            probe_depth: 3,
            max_blowups: DEFAULT_MAX_BLOWUPS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub surface: SurfacePair,
    #[serde(default)]
    pub connections: BTreeMap<String, ConnectionSpec>,
    #[serde(default)]
    pub divisors: BTreeMap<String, BTreeMap<String, i64>>,
    #[serde(default)]
    pub options: Options,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("validation error [{rule}]: {message}")]
    Validation { rule: String, message: String },
}

impl From<crate::Error> for ScenarioError {
    fn from(e: crate::Error) -> Self {
        ScenarioError::Validation {
            rule: e.rule().to_string(),
            message: e.to_string(),
        }
    }
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub pair: Arc<SurfacePair>,
    pub connections: BTreeMap<String, ExpConnection>,
    pub divisors: BTreeMap<String, DivisorOnX>,
    pub options: Options,
    file: ScenarioFile,
}

impl Scenario {
    pub fn from_json_str(text: &str) -> Result<Scenario, ScenarioError> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Scenario::from_file(file)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Scenario::from_json_str(&text)
    }

    pub fn from_file(file: ScenarioFile) -> Result<Scenario, ScenarioError> {
        let s = &file.surface;
        let pair = Arc::new(SurfacePair::new(s.chi_top, s.curves.clone(), s.points.clone())?);
        let mut connections = BTreeMap::new();
        for (name, spec) in &file.connections {
            let m = spec.build();
            m.validate(&pair)?;
            connections.insert(name.clone(), m);
        }
        let mut divisors = BTreeMap::new();
        for (name, coeffs) in &file.divisors {
            let d = DivisorOnX::from_ints(coeffs.iter().map(|(c, a)| (c.as_str(), *a)));
            d.check_refs(&pair)?;
            divisors.insert(name.clone(), d);
        }
        if file.options.probe_depth == 0 {
            return Err(ScenarioError::Validation {
                rule: "ProbeDepth".into(),
                message: "probe_depth must be at least 1".into(),
            });
        }
        Ok(Scenario {
            pair,
            connections,
            divisors,
            options: file.options,
            file,
        })
    }

    pub fn file(&self) -> &ScenarioFile {
        &self.file
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.file).expect("scenario serializes")
    }

    /// The named connection, or the only one when `name` is `None`.
    pub fn connection(&self, name: Option<&str>) -> Result<(&str, &ExpConnection), ScenarioError> {
        pick(&self.connections, name, "connection")
    }

    pub fn divisor(&self, name: Option<&str>) -> Result<(&str, &DivisorOnX), ScenarioError> {
        pick(&self.divisors, name, "divisor")
    }

    pub fn with_options(mut self, options: Options) -> Self {
        self.options = options;
        self.file.options = options;
        self
    }
}

fn pick<'a, T>(
    map: &'a BTreeMap<String, T>,
    name: Option<&str>,
    kind: &str,
) -> Result<(&'a str, &'a T), ScenarioError> {
    match name {
        Some(n) => map
            .get_key_value(n)
            .map(|(k, v)| (k.as_str(), v))
            .ok_or_else(|| ScenarioError::Validation {
                rule: "UnknownName".into(),
                message: format!("no {kind} named `{n}`"),
            }),
        None if map.len() == 1 => {
            let (k, v) = map.iter().next().expect("one entry");
            Ok((k.as_str(), v))
        }
        None => Err(ScenarioError::Validation {
            rule: "UnknownName".into(),
            message: format!("{} {kind}s defined; pass --{kind} <name>", map.len()),
        }),
    }
}

/// Divisor with integer coefficients as a plain map, for serialization.
pub fn divisor_ints(d: &DivisorOnX) -> BTreeMap<String, i64> {
    d.coeffs
        .iter()
        .filter(|(_, a)| a.is_integer())
        .map(|(c, a)| (c.clone(), a.to_integer()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"{
        "surface": {
            "euler_characteristic": 3,
            "curves": [{"id": "Lx", "genus": 0, "in_D": true}, {"id": "Ly", "genus": 0, "in_D": false}],
            "points": [{"id": "Pxy", "on": ["Ly", "Lx"]}]
        },
        "connections": {"M": {"summands": [{"rank": 1, "exponents": {"Lx": -1, "Ly": 1}, "coeff": "c"}]}},
        "divisors": {"R": {"Lx": 2}}
    }"#;

    #[test]
    fn parses_and_round_trips() {
        let s = Scenario::from_json_str(SMALL).unwrap();
        assert_eq!(s.pair.curves.len(), 2);
        assert_eq!(s.pair.points[0].on, vec!["Lx", "Ly"]);
        assert_eq!(s.options, Options::default());
        let (name, _) = s.connection(None).unwrap();
        assert_eq!(name, "M");
        let again = Scenario::from_json_str(&s.to_json()).unwrap();
        assert_eq!(again.file(), s.file());
        assert_eq!(again.to_json(), s.to_json());
    }

    #[test]
    fn reports_positions_and_rules() {
        let truncated = &SMALL[..SMALL.len() / 2];
        assert!(matches!(Scenario::from_json_str(truncated), Err(ScenarioError::Parse { line, .. }) if line > 1));
        let unknown = SMALL.replace("\"Ly\": 1", "\"Lq\": 1");
        match Scenario::from_json_str(&unknown) {
            Err(ScenarioError::Validation { rule, .. }) => assert_eq!(rule, "UnknownCurveRef"),
            other => panic!("{other:?}"),
        }
        let typo = SMALL.replace("\"divisors\"", "\"divisor\"");
        assert!(matches!(
            Scenario::from_json_str(&typo),
            Err(ScenarioError::Parse { .. })
        ));
        let pole = SMALL.replace("\"Ly\": 1", "\"Ly\": -1");
        assert!(
            matches!(Scenario::from_json_str(&pole), Err(ScenarioError::Validation { rule, .. }) if rule == "PoleOffD")
        );
    }
}
