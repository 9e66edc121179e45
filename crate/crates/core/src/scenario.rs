//! Scenario files: symbols, order, truncation, tolerances and optional
//! expected outcomes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::posinormality::{Tolerances, Verdict};
use crate::series::{SymbolSpec, DEFAULT_TRUNCATION};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_name")]
    pub name: String,
    pub psi: SymbolSpec,
    pub phi: SymbolSpec,
    pub n: usize,
    #[serde(default = "default_truncation")]
    pub truncation: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Defaults to `truncation / 4`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_dim: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<Expected>,
}

fn default_name() -> String {
    "scenario".into()
}

fn default_truncation() -> usize {
    DEFAULT_TRUNCATION
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Approx {
    pub value: f64,
    pub tol: f64,
}

impl Approx {
    pub fn matches(&self, x: f64) -> bool {
        (x - self.value).abs() <= self.tol
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum MuExpectation {
    /// `μ` matches the formula and the other coefficients vanish, both to `tol`.
    Within { tol: f64 },
    NotApplicable,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Expected {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub posinormality: Option<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coposinormality: Option<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shift_offset: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adjoint_shift_offset: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_estimate: Option<Approx>,
    /// Bound on the factorized-adjoint error at the scenario truncation; the
    /// error at twice the truncation must not be larger.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adjoint_factorization_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_recovery: Option<MuExpectation>,
}

impl Scenario {
    pub fn new(name: &str, psi: SymbolSpec, phi: SymbolSpec, n: usize) -> Self {
        Self {
            name: name.into(),
            psi,
            phi,
            n,
            truncation: DEFAULT_TRUNCATION,
            tolerances: Tolerances::default(),
            probe_dim: None,
            seed: 0,
            expected: None,
        }
    }

    pub fn with_truncation(mut self, truncation: usize) -> Self {
        self.truncation = truncation;
        self
    }

    pub fn with_expected(mut self, expected: Expected) -> Self {
        self.expected = Some(expected);
        self
    }

    pub fn probe_dim(&self) -> usize {
        self.probe_dim.unwrap_or(self.truncation / 4)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Validation(format!("scenario {}: {msg}", self.name)));
        if self.n < 1 {
            return fail(format!("n must be >= 1, got {}", self.n));
        }
        let min = 4 * self.n + 16;
        if self.truncation < min {
            return fail(format!("truncation {} is below 4n + 16 = {min}", self.truncation));
        }
        if let Err(e) = self.tolerances.validate() {
            return fail(e.to_string());
        }
        let probe = self.probe_dim();
        if probe == 0 || probe > self.truncation + 1 {
            return fail(format!("probe_dim {probe} must lie in 1..={}", self.truncation + 1));
        }
        self.psi.validate()?;
        self.phi.validate()?;
        if self.psi.is_identically_zero() {
            return fail("psi is identically zero".into());
        }
        Ok(())
    }
}

/// Parses and validates a scenario from UTF-8 JSON.
pub fn parse_scenario(text: &[u8]) -> Result<Scenario> {
    let text = std::str::from_utf8(text).map_err(|e| Error::Parse(format!("scenario is not UTF-8: {e}")))?;
    let scenario: Scenario = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    scenario.validate()?;
    Ok(scenario)
}
