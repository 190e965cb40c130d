//! Scenario files: a lending game plus an optional starting profile and
//! dynamics settings, stored as JSON.

use std::fs;
use std::path::Path;

use lendgame_core::{DynamicsConfig, GameError, LendingGame, StrategyProfile};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub description: String,
    /// Lender budgets.
    pub lenders: Vec<f64>,
    /// Borrower demands.
    pub borrowers: Vec<f64>,
    pub rate_min: f64,
    pub rate_max: f64,
    /// Row-major, one row per lender.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_profile: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dynamics: Option<DynamicsConfig>,
}

/// A scenario whose contents have passed every game, profile and
/// configuration check.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub scenario: Scenario,
    pub game: LendingGame,
    pub initial_profile: Option<StrategyProfile>,
}

impl Scenario {
    pub fn from_game(game: &LendingGame, description: impl Into<String>) -> Self {
        Self {
            description: description.into(),
            lenders: game.budgets().to_vec(),
            borrowers: game.demands().to_vec(),
            rate_min: game.rate_min(),
            rate_max: game.rate_max(),
            initial_profile: None,
            dynamics: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::invalid(format!("malformed scenario: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialises")
    }

    pub fn validate(self) -> Result<Loaded, CliError> {
        let game = LendingGame::new(self.lenders.clone(), self.borrowers.clone(), self.rate_min, self.rate_max)
            .map_err(invalid)?;
        let initial_profile = match &self.initial_profile {
            Some(rows) => {
                let profile = StrategyProfile::from_rows(rows).map_err(invalid)?;
                game.check_feasible(&profile).map_err(invalid)?;
                Some(profile)
            }
            None => None,
        };
        if let Some(config) = &self.dynamics {
            config.validate(&game).map_err(invalid)?;
        }
        Ok(Loaded {
            scenario: self,
            game,
            initial_profile,
        })
    }
}

fn invalid(e: GameError) -> CliError {
    CliError::invalid(format!("invalid scenario: {e}"))
}

pub fn load(path: &Path) -> Result<Loaded, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))?;
    Scenario::parse(&text)?.validate()
}
