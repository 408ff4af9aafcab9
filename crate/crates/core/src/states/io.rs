//! JSON state files: `{ "twice_spin": int, "amplitudes": [[re, im], ...] }`,
//! amplitudes in ascending m.

use std::fs;
use std::path::Path;

use log::warn;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::SpinState;
use crate::error::{Error, Result};

/// Input norms further than this from 1 are reported.
pub const NORM_WARN: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub twice_spin: u32,
    pub amplitudes: Vec<[f64; 2]>,
}

impl From<&SpinState> for StateFile {
    fn from(s: &SpinState) -> Self {
        StateFile {
            twice_spin: s.twice_spin(),
            amplitudes: s.amplitudes().iter().map(|a| [a.re, a.im]).collect(),
        }
    }
}

impl From<SpinState> for StateFile {
    fn from(s: SpinState) -> Self {
        StateFile::from(&s)
    }
}

impl TryFrom<StateFile> for SpinState {
    type Error = Error;

    fn try_from(f: StateFile) -> Result<Self> {
        f.into_state()
    }
}

impl StateFile {
    /// Validates and normalizes, warning when the stored norm is off.
    pub fn into_state(self) -> Result<SpinState> {
        let amps: Vec<C64> = self.amplitudes.iter().map(|&[re, im]| C64::new(re, im)).collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let state = SpinState::new(self.twice_spin, amps)?;
        if (norm - 1.0).abs() > NORM_WARN {
            warn!("input state norm is {norm}; normalized on load");
        }
        Ok(state)
    }
}

pub fn state_to_json(state: &SpinState) -> String {
    serde_json::to_string_pretty(&StateFile::from(state)).expect("state serializes")
}

pub fn state_from_json(text: &str) -> Result<SpinState> {
    let file: StateFile = serde_json::from_str(text)?;
    file.into_state()
}

pub fn read_state_file(path: impl AsRef<Path>) -> Result<SpinState> {
    state_from_json(&fs::read_to_string(path)?)
}

pub fn write_state_file(path: impl AsRef<Path>, state: &SpinState) -> Result<()> {
    fs::write(path, state_to_json(state) + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_documented_layout() {
        let s = state_from_json(r#"{"twice_spin": 2, "amplitudes": [[0,0],[1,0],[0,0]]}"#).unwrap();
        assert_eq!(s.amplitudes()[1], C64::new(1.0, 0.0));
    }

    #[test]
    fn normalizes_on_load() {
        let s = state_from_json(r#"{"twice_spin": 1, "amplitudes": [[3,0],[0,4]]}"#).unwrap();
        assert!((s.amplitudes()[1] - C64::new(0.0, 0.8)).norm() < 1e-15);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(matches!(state_from_json("{"), Err(Error::Format(_))));
        assert!(matches!(
            state_from_json(r#"{"twice_spin": 1, "amplitudes": []}"#),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            state_from_json(r#"{"twice_spin": 1, "amplitudes": [[0,0],[0,0]]}"#),
            Err(Error::ZeroVector)
        ));
    }
}
