use crate::error::{Error, Result};
use crate::integrators::{EndPolicy, Method};
use crate::operators::OperatorKind;
use crate::problems::ProblemSpec;
use crate::relaxation::RelaxationConfig;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Equation {
    #[default]
    Nls,
    NlsHyperbolic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    pub kind: OperatorKind,
    /// Ignored for Fourier operators.
    #[serde(default)]
    pub order: usize,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Space,
    Time,
}

/// Resolutions for `converge`: node counts (space) or time steps (time).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    /// Step of the reference run when the problem has no exact solution.
    pub reference_dt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthConfig {
    pub sample_times: Vec<f64>,
    /// Samples before this time are left out of the slope fit.
    #[serde(default)]
    pub fit_from: f64,
    pub reference_dt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: String,
    #[serde(default)]
    pub equation: Equation,
    pub operator: OperatorConfig,
    pub tableau: String,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub relaxation: RelaxationConfig,
    pub tau: Option<f64>,
    pub beta_override: Option<f64>,
    /// Overrides the problem's default domain `[x_left, x_right]`.
    pub domain: Option<[f64; 2]>,
    #[serde(default)]
    pub end_policy: EndPolicy,
    #[serde(default)]
    pub output: PathBuf,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    pub sweep: Option<SweepConfig>,
    pub error_growth: Option<GrowthConfig>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |m: String| Err(Error::Config(m));
        ProblemSpec::by_name(&self.problem).map_err(|e| Error::Config(format!("problem: {e}")))?;
        Method::by_name(&self.tableau).map_err(|e| Error::Config(format!("tableau: {e}")))?;
        self.relaxation.validate()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return cfg_err(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return cfg_err(format!("t_end must be positive, got {}", self.t_end));
        }
        match (self.equation, self.tau) {
            (Equation::NlsHyperbolic, None) => return cfg_err("tau is required for equation = \"nls_hyperbolic\"".into()),
            (Equation::NlsHyperbolic, Some(t)) if !(t > 0.0) => return cfg_err(format!("tau must be positive, got {t}")),
            (Equation::Nls, Some(_)) => return cfg_err("tau is only allowed for equation = \"nls_hyperbolic\"".into()),
            _ => {}
        }
        if self.operator.n < 2 {
            return cfg_err(format!("operator.n must be at least 2, got {}", self.operator.n));
        }
        if let Some(t) = self.snapshot_times.iter().find(|t| !(**t >= 0.0 && **t <= self.t_end)) {
            return cfg_err(format!("snapshot time {t} outside [0, {}]", self.t_end));
        }
        if let Some([a, b]) = self.domain {
            if !(b > a) {
                return cfg_err(format!("empty domain [{a}, {b}]"));
            }
        }
        if let Some(s) = &self.sweep {
            if s.values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return cfg_err("sweep values must be positive".into());
            }
            if s.axis == SweepAxis::Space && s.values.iter().any(|v| v.fract() != 0.0) {
                return cfg_err("space sweep values are node counts and must be integers".into());
            }
        }
        if let Some(g) = &self.error_growth {
            if g.sample_times.iter().any(|t| !(*t > 0.0 && *t <= self.t_end)) {
                return cfg_err(format!("error_growth sample times must lie in (0, {}]", self.t_end));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relaxation::RelaxationMode;

    const BASE: &str = r#"
problem = "two_soliton"
tableau = "ars3"
dt = 0.01
t_end = 4.3

[operator]
kind = "fourier"
n = 1024

[relaxation]
mode = "quadratic_preserving"
"#;

    #[test]
    fn parses_minimal_config() {
        let c = RunConfig::from_toml_str(BASE).unwrap();
        assert_eq!(c.equation, Equation::Nls);
        assert_eq!(c.operator.kind, OperatorKind::Fourier);
        assert_eq!(c.relaxation.mode, RelaxationMode::QuadraticPreserving);
        assert_eq!(c.relaxation.gamma_tol, 1e-13);
        assert!(c.snapshot_times.is_empty());
        let again = RunConfig::from_toml_str(&c.to_toml_string().unwrap()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn unknown_keys_are_errors_with_location() {
        let err = RunConfig::from_toml_str(&format!("{BASE}\nbogus = 1\n")).unwrap_err().to_string();
        assert!(err.contains("bogus"), "{err}");
        let err = RunConfig::from_toml_str(&BASE.replace("n = 1024", "n = 1024\nnodes = 3")).unwrap_err().to_string();
        assert!(err.contains("nodes") && err.contains("line"), "{err}");
    }

    #[test]
    fn semantic_checks() {
        let bad = [
            BASE.replace("ars3", "euler9"),
            BASE.replace("two_soliton", "four_soliton"),
            BASE.replace("dt = 0.01", "dt = -0.01"),
            BASE.replace("t_end = 4.3", "t_end = 0.0"),
            format!("equation = \"nls_hyperbolic\"\n{BASE}"),
            format!("tau = 0.1\n{BASE}"),
            format!("snapshot_times = [5.0]\n{BASE}"),
        ];
        for text in bad {
            assert!(RunConfig::from_toml_str(&text).is_err(), "{text}");
        }
        let hyp = format!("equation = \"nls_hyperbolic\"\ntau = 1e-4\n{BASE}");
        assert_eq!(RunConfig::from_toml_str(&hyp).unwrap().tau, Some(1e-4));
    }
}
