//! Comparison tabulation: per-agent served/delay rows over matched seeds.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub agent: String,
    pub seed: u64,
    pub served: u64,
    pub terminated_at: Option<u32>,
    pub final_delay: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentRow {
    pub spec: String,
    pub policy: String,
    pub runs: Vec<EpisodeSummary>,
    pub mean_served: f64,
    pub mean_delay: f64,
}

impl AgentRow {
    pub fn new(spec: String, policy: String, runs: Vec<EpisodeSummary>) -> AgentRow {
        let n = runs.len().max(1) as f64;
        let mean_served = runs.iter().map(|r| r.served as f64).sum::<f64>() / n;
        let mean_delay = runs.iter().map(|r| r.final_delay).sum::<f64>() / n;
        AgentRow { spec, policy, runs, mean_served, mean_delay }
    }

    pub fn name(&self) -> &str {
        self.runs.first().map(|r| r.agent.as_str()).unwrap_or(&self.spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub scenario_hash: u64,
    pub horizon: u32,
    pub rows: Vec<AgentRow>,
}

impl ComparisonReport {
    pub fn mean_served(&self, spec: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.spec == spec).map(|r| r.mean_served)
    }

    /// served/delay cells, one row per agent, one column per seed.
    pub fn to_markdown(&self) -> String {
        let seeds: Vec<u64> = self.rows.first().map(|r| r.runs.iter().map(|x| x.seed).collect()).unwrap_or_default();
        let mut out = String::new();
        out.push_str(&format!(
            "scenario hash: {:016x}, horizon: {} s\n\n",
            self.scenario_hash, self.horizon
        ));
        out.push_str("| agent | policy |");
        for s in &seeds {
            out.push_str(&format!(" seed {s} |"));
        }
        out.push_str(" mean served |\n|---|---|");
        for _ in &seeds {
            out.push_str("---|");
        }
        out.push_str("---|\n");
        for row in &self.rows {
            out.push_str(&format!("| {} | {} |", row.name(), row.policy));
            for r in &row.runs {
                out.push_str(&format!(" {}/{:.3} |", r.served, r.final_delay));
            }
            out.push_str(&format!(" {:.1} |\n", row.mean_served));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("agent,policy,seed,served,terminated_at,final_delay\n");
        for row in &self.rows {
            for r in &row.runs {
                out.push_str(&format!(
                    "{},{},{},{},{},{:.6}\n",
                    row.name(),
                    row.policy,
                    r.seed,
                    r.served,
                    r.terminated_at.map(|t| t.to_string()).unwrap_or_default(),
                    r.final_delay
                ));
            }
        }
        out
    }
}
