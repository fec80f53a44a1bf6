use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use rio_core::C64;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("invalid config {path}: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error("{field}: {message}")]
    Invalid { field: &'static str, message: String },
}

pub fn invalid(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, message: message.into() }
}

/// A JSON value given either as a number or as text such as `"pi/4"`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Number(f64),
    Text(String),
}

impl Scalar {
    pub fn text(&self) -> String {
        match self {
            Scalar::Number(x) => x.to_string(),
            Scalar::Text(s) => s.clone(),
        }
    }
}

/// Contents of `--config`; keys mirror the long flag names.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub protocol: Option<String>,
    pub channel: Option<String>,
    pub alpha: Option<Scalar>,
    pub beta: Option<Scalar>,
    pub u: Option<Scalar>,
    pub v: Option<Scalar>,
    pub u_phase: Option<Scalar>,
    pub v_phase: Option<Scalar>,
    pub m: Option<u8>,
    pub z: Option<Scalar>,
    pub theta: Option<Scalar>,
    #[serde(rename = "D", alias = "dissipation")]
    pub d: Option<Scalar>,
    pub gamma: Option<Scalar>,
    pub t: Option<Scalar>,
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    #[serde(alias = "forced_outcomes")]
    pub force: Option<String>,
    pub axis: Option<String>,
    pub from: Option<Scalar>,
    pub to: Option<Scalar>,
    pub steps: Option<usize>,
    pub kind: Option<String>,
    pub parties: Option<usize>,
    pub controllers: Option<usize>,
    pub form: Option<String>,
    pub r: Option<u8>,
    pub bits: Option<String>,
    pub bidirectional: Option<bool>,
    pub task: Option<String>,
    pub cases: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let display = path.display().to_string();
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: display.clone(), source })?;
        serde_json::from_str(&text).map_err(|source| ConfigError::Json { path: display, source })
    }
}

/// Real number with optional `pi` factor: `0.785`, `pi`, `-pi/4`, `3pi/4`,
/// `2*pi`.
pub fn parse_real(field: &'static str, text: &str) -> Result<f64, ConfigError> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_ascii_lowercase();
    let Some((coef, rest)) = s.split_once("pi") else {
        return s.parse().map_err(|_| invalid(field, format!("cannot parse {text:?} as a number")));
    };
    let coef = coef.trim_end_matches('*');
    let factor = match coef {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().map_err(|_| invalid(field, format!("bad coefficient in {text:?}")))?,
    };
    let divisor = match rest {
        "" => 1.0,
        r => r
            .strip_prefix('/')
            .and_then(|d| d.parse::<f64>().ok())
            .filter(|d| *d != 0.0)
            .ok_or_else(|| invalid(field, format!("bad divisor in {text:?}")))?,
    };
    Ok(factor * std::f64::consts::PI / divisor)
}

/// Complex literal such as `0.6`, `0.8i`, `0.6+0.8i`, or `None` for
/// `random`.
pub fn parse_complex(field: &'static str, text: &str) -> Result<Option<C64>, ConfigError> {
    let s = text.trim();
    if s.eq_ignore_ascii_case("random") {
        return Ok(None);
    }
    s.replace(' ', "")
        .parse::<C64>()
        .map(Some)
        .map_err(|_| invalid(field, format!("cannot parse {text:?} as a complex number")))
}

/// Flag value if given, then config value, then nothing.
pub fn pick<T: Clone>(flag: &Option<T>, file: &Option<T>) -> Option<T> {
    flag.clone().or_else(|| file.clone())
}

pub fn pick_real(
    field: &'static str,
    flag: &Option<String>,
    file: &Option<Scalar>,
) -> Result<Option<f64>, ConfigError> {
    match (flag, file) {
        (Some(text), _) => parse_real(field, text).map(Some),
        (None, Some(Scalar::Number(x))) => Ok(Some(*x)),
        (None, Some(Scalar::Text(text))) => parse_real(field, text).map(Some),
        (None, None) => Ok(None),
    }
}

pub fn pick_complex(
    field: &'static str,
    flag: &Option<String>,
    file: &Option<Scalar>,
) -> Result<Option<Option<C64>>, ConfigError> {
    match flag.clone().or_else(|| file.as_ref().map(Scalar::text)) {
        Some(text) => parse_complex(field, &text).map(Some),
        None => Ok(None),
    }
}

pub fn parse_bits(field: &'static str, text: &str) -> Result<Vec<u8>, ConfigError> {
    text.split(',')
        .map(str::trim)
        .filter(|b| !b.is_empty())
        .map(|b| match b {
            "0" => Ok(0),
            "1" => Ok(1),
            other => Err(invalid(field, format!("{other:?} is not a bit"))),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn pi_literals() {
        assert_eq!(parse_real("theta", "pi").unwrap(), PI);
        assert_eq!(parse_real("theta", "pi/4").unwrap(), PI / 4.0);
        assert_eq!(parse_real("theta", "-pi/2").unwrap(), -PI / 2.0);
        assert_eq!(parse_real("theta", "3pi/4").unwrap(), 3.0 * PI / 4.0);
        assert_eq!(parse_real("theta", "2*pi").unwrap(), 2.0 * PI);
        assert_eq!(parse_real("theta", "0.785").unwrap(), 0.785);
        assert!(parse_real("theta", "pi/0").is_err());
        assert!(parse_real("theta", "tau").is_err());
    }

    #[test]
    fn complex_literals() {
        assert_eq!(parse_complex("alpha", "0.6").unwrap(), Some(C64::new(0.6, 0.0)));
        assert_eq!(parse_complex("alpha", "0.6+0.8i").unwrap(), Some(C64::new(0.6, 0.8)));
        assert_eq!(parse_complex("alpha", "-0.8i").unwrap(), Some(C64::new(0.0, -0.8)));
        assert_eq!(parse_complex("alpha", "random").unwrap(), None);
        assert!(parse_complex("alpha", "x").is_err());
    }

    #[test]
    fn flags_override_file() {
        let from_flag = pick_real("z", &Some("2".into()), &Some(Scalar::Number(3.0))).unwrap();
        assert_eq!(from_flag, Some(2.0));
        let from_file = pick_real("z", &None, &Some(Scalar::Text("pi".into()))).unwrap();
        assert_eq!(from_file, Some(PI));
    }

    #[test]
    fn config_rejects_unknown_keys() {
        assert!(serde_json::from_str::<FileConfig>(r#"{"zz": 1}"#).is_err());
        let c: FileConfig = serde_json::from_str(r#"{"D": 0.5, "theta": "pi/4", "forced_outcomes": "k=1"}"#).unwrap();
        assert_eq!(c.d, Some(Scalar::Number(0.5)));
        assert_eq!(c.force.as_deref(), Some("k=1"));
    }
}
