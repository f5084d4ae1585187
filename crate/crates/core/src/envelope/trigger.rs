//! Staged safety triggers.
//!
//! Stage 0 is nominal; stage `i` (1-based) is armed while the frame
//! uncertainty is at or above threshold `i`. Escalation needs `debounce + 1`
//! consecutive frames at or above the new stage. De-escalation is immediate.

use crate::{Error, Result};

pub const NOMINAL: &str = "nominal";

#[derive(Clone, Debug, PartialEq)]
pub struct TriggerConfig {
    thresholds: Vec<f64>,
    stage_names: Vec<String>,
    debounce: u32,
}

impl TriggerConfig {
    pub fn new(thresholds: Vec<f64>, stage_names: Vec<String>, debounce: u32) -> Result<Self> {
        if thresholds.len() != stage_names.len() {
            return Err(Error::Config(format!(
                "{} thresholds but {} stage names",
                thresholds.len(),
                stage_names.len()
            )));
        }
        if thresholds.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
            return Err(Error::Config(format!("thresholds {thresholds:?} must lie in (0, 1)")));
        }
        if thresholds.windows(2).any(|p| p[0] >= p[1]) {
            return Err(Error::Config(format!(
                "thresholds {thresholds:?} must be strictly increasing"
            )));
        }
        Ok(Self {
            thresholds,
            stage_names,
            debounce,
        })
    }

    /// Thresholds with generic names `stage1`, `stage2`, ...
    pub fn with_thresholds(thresholds: Vec<f64>, debounce: u32) -> Result<Self> {
        let names = (1..=thresholds.len()).map(|i| format!("stage{i}")).collect();
        Self::new(thresholds, names, debounce)
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn debounce(&self) -> u32 {
        self.debounce
    }

    pub fn stages(&self) -> usize {
        self.thresholds.len()
    }

    pub fn stage_name(&self, stage: usize) -> &str {
        match stage {
            0 => NOMINAL,
            i => &self.stage_names[i - 1],
        }
    }
}

impl Default for TriggerConfig {
    /// notify / slow_down / safe_state at 0.05 / 0.15 / 0.30, no debounce.
    fn default() -> Self {
        Self::new(
            vec![0.05, 0.15, 0.30],
            vec!["notify".into(), "slow_down".into(), "safe_state".into()],
            0,
        )
        .expect("default trigger config is valid")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TriggerState {
    stage: usize,
    /// `streaks[i]`: consecutive frames whose candidate stage was at least `i + 1`.
    streaks: Vec<u32>,
}

impl TriggerState {
    pub fn new(config: &TriggerConfig) -> Self {
        Self {
            stage: 0,
            streaks: vec![0; config.stages()],
        }
    }

    pub fn stage(&self) -> usize {
        self.stage
    }

    /// Consecutive frames at or above the current candidate for the next stage up.
    pub fn consecutive_exceed(&self) -> u32 {
        self.streaks.get(self.stage).copied().unwrap_or(0)
    }
}

/// Highest stage whose threshold `u` reaches, 0 if none.
pub fn candidate_stage(u: f64, config: &TriggerConfig) -> usize {
    config.thresholds.iter().take_while(|&&t| u >= t).count()
}

pub fn update_trigger(state: &TriggerState, u: f64, config: &TriggerConfig) -> TriggerState {
    let candidate = candidate_stage(u, config);
    let streaks: Vec<u32> = (1..=config.stages())
        .map(|level| {
            if candidate >= level {
                state.streaks.get(level - 1).copied().unwrap_or(0).saturating_add(1)
            } else {
                0
            }
        })
        .collect();
    let stage = if candidate < state.stage {
        candidate
    } else {
        (state.stage + 1..=candidate)
            .rev()
            .find(|&level| streaks[level - 1] > config.debounce)
            .unwrap_or(state.stage)
    };
    TriggerState { stage, streaks }
}
