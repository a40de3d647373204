use crate::error::{Error, Result};
use crate::problems::ProblemParams;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Converge,
    Stability,
    Paths,
    Ssp,
    Schrodinger,
    SolveComposite,
}

/// Geometric step ladder `base · ratio^k`, `k = 0..count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ladder {
    pub base: f64,
    pub ratio: f64,
    pub count: usize,
}

impl Ladder {
    pub fn new(base: f64, ratio: f64, count: usize) -> Result<Self> {
        let l = Ladder { base, ratio, count };
        l.validate()?;
        Ok(l)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.base > 0.0) || !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(Error::arg("ladder needs base > 0 and 0 < ratio < 1"));
        }
        if self.count < 3 {
            return Err(Error::arg("ladder needs at least 3 steps for a slope fit"));
        }
        Ok(())
    }

    pub fn steps(&self) -> Vec<f64> {
        (0..self.count)
            .map(|k| self.base * self.ratio.powi(k as i32))
            .collect()
    }
}

impl Default for Ladder {
    fn default() -> Self {
        Ladder {
            base: 0.1,
            ratio: 0.5,
            count: 7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NormKind {
    #[default]
    Inf,
    Two,
    Relative,
}

/// One JSON document describing a reproducible run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub problems: Vec<String>,
    /// Method names: library paths (optionally `variant:path`), reference
    /// methods, or `composite-rk23`.
    pub methods: Vec<String>,
    /// Inline scheme documents, run after the named methods.
    pub schemes: Vec<crate::integrators::MethodSpec>,
    /// Step ladder; `None` picks the default for the experiment kind.
    pub ladder: Option<Ladder>,
    pub t_end: Option<f64>,
    pub fair: bool,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub norm: NormKind,
    pub params: ProblemParams,
    /// Reference fixture for problems without a closed-form solution.
    pub reference: Option<PathBuf>,
    /// Path step counts for the `paths` experiment.
    pub path_steps: Vec<usize>,
    pub stability: StabilityConfig,
    pub ssp: SspConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilityConfig {
    /// `[x_min, x_max, y_min, y_max]`.
    pub window: [f64; 4],
    pub nx: usize,
    pub ny: usize,
    /// Ray directions `[re, im]` for extent queries.
    pub rays: Vec<[f64; 2]>,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        StabilityConfig {
            window: [-4.0, 1.0, -3.0, 3.0],
            nx: 251,
            ny: 301,
            rays: vec![[-1.0, 0.0]],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SspConfig {
    pub u_min: f64,
    pub u_max: f64,
    pub points: usize,
}

impl Default for SspConfig {
    fn default() -> Self {
        SspConfig {
            u_min: 0.1,
            u_max: 10.0,
            points: 200,
        }
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kind: ExperimentKind::Converge,
            problems: Vec::new(),
            methods: Vec::new(),
            schemes: Vec::new(),
            ladder: None,
            t_end: None,
            fair: false,
            seed: 0,
            out: None,
            norm: NormKind::Inf,
            params: ProblemParams::default(),
            reference: None,
            path_steps: vec![1, 2, 3],
            stability: StabilityConfig::default(),
            ssp: SspConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn for_kind(kind: ExperimentKind) -> Self {
        ExperimentConfig {
            kind,
            ..Default::default()
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: ExperimentConfig = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(l) = &self.ladder {
            l.validate()?;
        }
        if let Some(t) = self.t_end {
            if !(t > 0.0) || !t.is_finite() {
                return Err(Error::arg("t_end must be positive"));
            }
        }
        let st = &self.stability;
        if st.nx < 2 || st.ny < 2 {
            return Err(Error::arg("stability raster needs at least 2×2 points"));
        }
        if !(self.ssp.u_min > 0.0 && self.ssp.u_max > self.ssp.u_min) || self.ssp.points < 2 {
            return Err(Error::arg("SSP grid needs 0 < u_min < u_max and ≥ 2 points"));
        }
        Ok(())
    }

    /// Configured ladder, or the default for this kind.
    pub fn ladder(&self) -> Ladder {
        self.ladder.unwrap_or(match self.kind {
            ExperimentKind::Schrodinger => Ladder {
                base: 6e-3,
                ratio: 0.5,
                count: 4,
            },
            _ => Ladder::default(),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// sha256 of the canonical JSON, ignoring the output directory.
    pub fn hash(&self) -> String {
        let canonical = ExperimentConfig {
            out: None,
            ..self.clone()
        };
        let text = serde_json::to_string(&canonical).expect("config serialises");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_rejection() {
        let mut c = ExperimentConfig::for_kind(ExperimentKind::Ssp);
        c.problems = vec!["square".into()];
        c.seed = 9;
        let text = c.to_json().unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), c);
        assert!(ExperimentConfig::from_json(r#"{"kind":"converge","bogus":1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"ladder":{"base":0.1,"ratio":0.5,"count":2}}"#).is_err());
        assert_eq!(c.hash(), c.clone().hash());
    }
}
