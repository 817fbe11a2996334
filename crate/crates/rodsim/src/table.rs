//! Freestream table files.
//!
//! ```text
//! # comment
//! direction 1 0 0
//! 0.0  0.5
//! 10.0 1.2
//! ```
//!
//! One `direction x y z` line, then `z speed` rows with strictly increasing
//! `z`. The speed is interpolated linearly and held constant outside the
//! table.

use rodsim_core::forces::FreestreamProfile;
use rodsim_core::Vec3;

use crate::scenario::ScenarioError;

/// Parses table text into a freestream profile. `path` only labels errors.
pub fn parse_table(text: &str, path: &str) -> Result<FreestreamProfile, ScenarioError> {
    let err = |line: usize, message: String| ScenarioError::Io { path: path.to_string(), message: format!("line {line}: {message}") };
    let mut direction = None;
    let (mut z, mut speed) = (Vec::new(), Vec::new());
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or_default().trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        let nums = |items: &[&str]| -> Result<Vec<f64>, ScenarioError> {
            items
                .iter()
                .map(|s| {
                    s.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| err(line, format!("`{s}` is not a finite number")))
                })
                .collect()
        };
        if fields[0] == "direction" {
            if direction.is_some() {
                return Err(err(line, "direction given twice".into()));
            }
            if fields.len() != 4 {
                return Err(err(line, "expected `direction x y z`".into()));
            }
            let v = nums(&fields[1..])?;
            direction = Some(Vec3::new(v[0], v[1], v[2]));
        } else {
            if fields.len() != 2 {
                return Err(err(line, "expected `z speed`".into()));
            }
            let v = nums(&fields)?;
            z.push(v[0]);
            speed.push(v[1]);
        }
    }
    let direction = direction.ok_or_else(|| err(0, "missing `direction x y z` line".into()))?;
    FreestreamProfile::table(z, speed, direction).map_err(|e| ScenarioError::Io { path: path.to_string(), message: e.to_string() })
}

/// Reads and parses a table file.
pub fn read_table(path: &str) -> Result<FreestreamProfile, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io { path: path.to_string(), message: e.to_string() })?;
    parse_table(&text, path)
}
