//! Scenario documents: a JSON description of an economy plus optional
//! defaults for the command to run on it.
//!
//! The document is the single interchange format of the tool. Parsing
//! validates every invariant the solvers rely on (corner endowments,
//! positive weights and parameters, increasing replication counts), so a
//! scenario that parses is a scenario that runs.

use serde::{Deserialize, Serialize};

use agora::{Agent, Economy, InverseDemand, Role, UtilityFunction};

use crate::CliError;

/// Which equilibrium concept to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
#[clap(rename_all = "kebab-case")]
pub enum Concept {
    Walras,
    Cournot,
    CournotWalras,
    Nash,
    Spne,
}

impl std::fmt::Display for Concept {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Concept::Walras => "walras",
            Concept::Cournot => "cournot",
            Concept::CournotWalras => "cournot-walras",
            Concept::Nash => "nash",
            Concept::Spne => "spne",
        };
        write!(f, "{name}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
#[clap(rename_all = "kebab-case")]
pub enum ModeArg {
    Partial,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
#[clap(rename_all = "kebab-case")]
pub enum GameArg {
    Nash,
    Spne,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
#[clap(rename_all = "kebab-case")]
pub enum FormatArg {
    Csv,
    Md,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleDoc {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "family",
    content = "params",
    rename_all = "snake_case",
    deny_unknown_fields
)]
pub enum UtilityDoc {
    LogQuasiLinear { a: f64 },
    QuadQuasiLinear { alpha: f64, beta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoleDoc {
    Seller,
    Buyer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentDoc {
    pub role: RoleDoc,
    pub endowment: BundleDoc,
    #[serde(default = "default_weight")]
    pub weight: f64,
    pub utility: UtilityDoc,
}

fn default_weight() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DemandDoc {
    Linear { intercept: f64, slope: f64 },
}

/// A parsed and validated scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub description: String,
    pub agents: Vec<AgentDoc>,
    /// Explicit inverse demand for the partial-equilibrium Cournot game.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demand: Option<DemandDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concept: Option<Concept>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<ModeArg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_values: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<FormatArg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub benchmark: Option<Concept>,
    /// Free-text annotations keyed by output quantity, rendered as the
    /// table's note column (e.g. the exact radical behind a value).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<std::collections::BTreeMap<String, String>>,
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario, CliError> {
    let scenario: Scenario =
        serde_json::from_str(text).map_err(|e| CliError::Schema(e.to_string()))?;
    scenario.validate()?;
    Ok(scenario)
}

impl Scenario {
    fn validate(&self) -> Result<(), CliError> {
        if self.agents.is_empty() {
            return Err(CliError::Schema("scenario has no agents".to_string()));
        }
        for (index, doc) in self.agents.iter().enumerate() {
            build_agent(index, doc).map_err(|e| CliError::Schema(format!("agent {index}: {e}")))?;
        }
        if let Some(DemandDoc::Linear { intercept, slope }) = self.demand {
            InverseDemand::linear(intercept, slope)
                .map_err(|e| CliError::Schema(format!("demand: {e}")))?;
        }
        if let Some(values) = &self.n_values {
            if values.is_empty() || values.windows(2).any(|w| w[0] >= w[1]) {
                return Err(CliError::Schema(
                    "n_values must be non-empty and strictly increasing".to_string(),
                ));
            }
            if values.contains(&0) {
                return Err(CliError::Schema("n_values must be at least 1".to_string()));
            }
        }
        if let Some(tol) = self.tol {
            if !(tol.is_finite() && tol > 0.0) {
                return Err(CliError::Schema(format!(
                    "tol must be strictly positive, got {tol}"
                )));
            }
        }
        Ok(())
    }

    /// The full two-sided economy; errors if a side is missing.
    pub fn economy(&self) -> Result<Economy, CliError> {
        let agents = self
            .agents
            .iter()
            .enumerate()
            .map(|(index, doc)| build_agent(index, doc))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::Schema(e.to_string()))?;
        Economy::new(self.description.clone(), agents).map_err(|e| CliError::Schema(e.to_string()))
    }

    /// Sellers only, for the partial-equilibrium game.
    pub fn sellers(&self) -> Result<Vec<Agent>, CliError> {
        let agents = self
            .agents
            .iter()
            .enumerate()
            .filter(|(_, doc)| doc.role == RoleDoc::Seller)
            .map(|(index, doc)| build_agent(index, doc))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::Schema(e.to_string()))?;
        if agents.is_empty() {
            return Err(CliError::Schema("scenario has no sellers".to_string()));
        }
        Ok(agents)
    }

    /// Inverse demand for the Cournot game: the explicit `demand` entry if
    /// present, otherwise derived from the scenario's buyers.
    pub fn inverse_demand(&self) -> Result<InverseDemand, CliError> {
        match self.demand {
            Some(DemandDoc::Linear { intercept, slope }) => {
                InverseDemand::linear(intercept, slope).map_err(|e| CliError::Schema(e.to_string()))
            }
            None => {
                let economy = self.economy().map_err(|_| {
                    CliError::Schema(
                        "cournot needs either a demand entry or buyers to derive one from"
                            .to_string(),
                    )
                })?;
                InverseDemand::from_buyers(&economy).map_err(|e| CliError::Schema(e.to_string()))
            }
        }
    }

    /// Note for a quantity, preferring a concept-qualified key like
    /// `"nash.price_x"` over the bare quantity name.
    pub fn note(&self, concept: &str, quantity: &str) -> String {
        let Some(notes) = self.notes.as_ref() else {
            return String::new();
        };
        notes
            .get(&format!("{concept}.{quantity}"))
            .or_else(|| notes.get(quantity))
            .cloned()
            .unwrap_or_default()
    }
}

fn build_agent(index: usize, doc: &AgentDoc) -> Result<Agent, agora::EconError> {
    let utility = match doc.utility {
        UtilityDoc::LogQuasiLinear { a } => UtilityFunction::log_quasi_linear(a)?,
        UtilityDoc::QuadQuasiLinear { alpha, beta } => {
            UtilityFunction::quad_quasi_linear(alpha, beta)?
        }
    };
    let id = index as u32;
    match doc.role {
        RoleDoc::Seller => {
            if doc.endowment.y != 0.0 {
                return Err(agora::EconError::CornerEndowmentViolated {
                    role: Role::Seller,
                    x: doc.endowment.x,
                    y: doc.endowment.y,
                });
            }
            Agent::seller(id, doc.endowment.x, doc.weight, utility)
        }
        RoleDoc::Buyer => {
            if doc.endowment.x != 0.0 {
                return Err(agora::EconError::CornerEndowmentViolated {
                    role: Role::Buyer,
                    x: doc.endowment.x,
                    y: doc.endowment.y,
                });
            }
            Agent::buyer(id, doc.endowment.y, doc.weight, utility)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "description": "pair",
        "agents": [
            {"role": "seller", "endowment": {"x": 3.0, "y": 0.0},
             "utility": {"family": "log_quasi_linear", "params": {"a": 1.0}}},
            {"role": "buyer", "endowment": {"x": 0.0, "y": 5.0},
             "utility": {"family": "quad_quasi_linear", "params": {"alpha": 3.0, "beta": 1.0}}}
        ]
    }"#;

    #[test]
    fn parses_a_minimal_scenario() {
        let scenario = parse_scenario(MINIMAL).unwrap();
        let economy = scenario.economy().unwrap();
        assert_eq!(economy.seller_count(), 1);
        assert_eq!(economy.buyer_count(), 1);
        assert_eq!(economy.agents()[0].weight, 1.0);
    }

    #[test]
    fn rejects_non_corner_endowments() {
        let text = MINIMAL.replace(r#"{"x": 3.0, "y": 0.0}"#, r#"{"x": 3.0, "y": 1.0}"#);
        let err = parse_scenario(&text).unwrap_err();
        assert!(err.to_string().contains("corner"), "{err}");
    }

    #[test]
    fn rejects_non_increasing_n_values() {
        let text = MINIMAL.replace("\"agents\"", "\"n_values\": [5, 2], \"agents\"");
        let err = parse_scenario(&text).unwrap_err();
        assert!(err.to_string().contains("increasing"), "{err}");
    }

    #[test]
    fn rejects_unknown_fields_and_concepts() {
        let text = MINIMAL.replace("\"description\"", "\"descriptoin\"");
        assert!(parse_scenario(&text).is_err());

        let text = MINIMAL.replace("\"agents\"", "\"concept\": \"bertrand\", \"agents\"");
        assert!(parse_scenario(&text).is_err());
    }

    #[test]
    fn round_trips_through_json() {
        let scenario = parse_scenario(MINIMAL).unwrap();
        let emitted = serde_json::to_string_pretty(&scenario).unwrap();
        let reparsed = parse_scenario(&emitted).unwrap();
        assert_eq!(scenario, reparsed);
    }
}
