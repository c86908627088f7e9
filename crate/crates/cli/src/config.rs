//! Experiment configuration files.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use cmpg::duality::BimatrixCmpg;
use cmpg::envs::{
    build_congestion_game, build_grid_world, counterexample, zero_gap_example, CongestionConfig,
    GridWorldConfig,
};
use cmpg::tabular::GameDocument;
use cmpg::Cmpg;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    DualityReport,
    CaKnown,
    CaExplore,
    Verify,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    #[default]
    Lp,
    PrimalDual,
    Generative,
}

/// Where the environment comes from. Unit variants are built-in games.
#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvironmentSpec {
    Grid(GridWorldConfig),
    Congestion(CongestionConfig),
    Bimatrix(BimatrixCmpg),
    Counterexample,
    ZeroGap,
    /// Game document, inline or as a path.
    Game(GameSource),
    /// Another JSON file holding an environment spec.
    File(PathBuf),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum GameSource {
    Path(PathBuf),
    Inline(Box<GameDocument>),
}

/// Starting profile for coordinate ascent, or the profile to verify.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitSpec {
    /// Cheapest joint policy for the single constraint.
    #[default]
    Cheapest,
    FirstAction,
    Uniform,
    /// Congestion only: agents spread over the routes in the unsafe state.
    EvenSplit,
    /// Joint policy JSON file.
    File(PathBuf),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub environment: EnvironmentSpec,
    pub algorithm: Algorithm,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    /// Episodes per estimate (exploration mode).
    pub episodes: Option<usize>,
    /// Primal-dual iterations.
    pub iterations: Option<u64>,
    /// Generative-model samples per state-action pair.
    pub samples: Option<u64>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub solver: SolverKind,
    /// Slater constant for the sampling solvers; estimated when absent.
    pub slater: Option<f64>,
    pub max_cycles: Option<usize>,
    #[serde(default)]
    pub init: InitSpec,
    pub output_dir: Option<PathBuf>,
}

/// A built environment plus whatever extra structure the pipelines use.
pub struct Environment {
    pub game: Cmpg,
    pub bimatrix: Option<BimatrixCmpg>,
    pub congestion: Option<CongestionConfig>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: Self =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve(base);
        cfg.validate()?;
        Ok(cfg)
    }

    /// Makes relative file references relative to the config's directory.
    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut self.environment {
            EnvironmentSpec::File(p) | EnvironmentSpec::Game(GameSource::Path(p)) => fix(p),
            _ => {}
        }
        if let InitSpec::File(p) = &mut self.init {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: Option<f64>| -> Result<()> {
            match v {
                Some(x) if !(x > 0.0 && x.is_finite()) => bail!("{name} must be positive, got {x}"),
                _ => Ok(()),
            }
        };
        positive("epsilon", self.epsilon)?;
        positive("slater", self.slater)?;
        if let Some(d) = self.delta {
            if !(d > 0.0 && d < 1.0) {
                bail!("delta must lie in (0, 1), got {d}");
            }
        }
        if self.episodes == Some(0) {
            bail!("episodes must be at least 1");
        }
        for (name, v) in [("iterations", self.iterations), ("samples", self.samples)] {
            if v == Some(0) {
                bail!("{name} must be at least 1");
            }
        }
        if self.max_cycles == Some(0) {
            bail!("max_cycles must be at least 1");
        }
        match self.algorithm {
            Algorithm::CaKnown | Algorithm::CaExplore if self.epsilon.is_none() => {
                bail!("{:?} needs epsilon", self.algorithm)
            }
            Algorithm::CaExplore if self.delta.is_none() => bail!("ca_explore needs delta"),
            _ => Ok(()),
        }
    }
}

impl EnvironmentSpec {
    pub fn build(&self) -> Result<Environment> {
        let plain = |game: Cmpg| Environment {
            game,
            bimatrix: None,
            congestion: None,
        };
        let matrix = |bm: BimatrixCmpg| -> Result<Environment> {
            Ok(Environment {
                game: bm.to_cmpg()?,
                bimatrix: Some(bm),
                congestion: None,
            })
        };
        Ok(match self {
            Self::Grid(cfg) => plain(build_grid_world(cfg)?),
            Self::Congestion(cfg) => Environment {
                game: build_congestion_game(cfg)?,
                bimatrix: None,
                congestion: Some(cfg.clone()),
            },
            Self::Bimatrix(bm) => {
                bm.validate()?;
                matrix(bm.clone())?
            }
            Self::Counterexample => matrix(counterexample())?,
            Self::ZeroGap => matrix(zero_gap_example())?,
            Self::Game(GameSource::Inline(doc)) => plain(doc.as_ref().clone().into_game()?),
            Self::Game(GameSource::Path(p)) => {
                let text =
                    fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                plain(
                    Cmpg::from_json(&text)
                        .with_context(|| format!("loading game {}", p.display()))?,
                )
            }
            Self::File(p) => {
                let text =
                    fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                let mut inner: EnvironmentSpec = serde_json::from_str(&text)
                    .with_context(|| format!("parsing environment {}", p.display()))?;
                if let Self::File(_) = inner {
                    bail!("environment file {} points at another file", p.display());
                }
                if let Self::Game(GameSource::Path(q)) = &mut inner {
                    if q.is_relative() {
                        *q = p.parent().unwrap_or(Path::new(".")).join(&*q);
                    }
                }
                inner.build()?
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    #[test]
    fn minimal_configs_parse() {
        let cfg =
            parse(r#"{"environment": "counterexample", "algorithm": "duality_report"}"#).unwrap();
        assert!(matches!(cfg.environment, EnvironmentSpec::Counterexample));
        let cfg =
            parse(r#"{"environment": {"grid": {}}, "algorithm": "ca_known", "epsilon": 0.05}"#)
                .unwrap();
        assert_eq!(cfg.solver, SolverKind::Lp);
        assert!(matches!(cfg.init, InitSpec::Cheapest));
        let cfg = parse(
            r#"{"environment": {"congestion": {"n_agents": 4}}, "algorithm": "ca_known",
                "epsilon": 0.1, "init": "even_split"}"#,
        )
        .unwrap();
        assert!(matches!(cfg.init, InitSpec::EvenSplit));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(parse(r#"{"environment": "zero_gap", "algorithm": "ca_known"}"#).is_err());
        assert!(
            parse(r#"{"environment": "zero_gap", "algorithm": "ca_known", "epsilon": -1}"#)
                .is_err()
        );
        assert!(
            parse(r#"{"environment": "zero_gap", "algorithm": "ca_explore", "epsilon": 0.1}"#)
                .is_err()
        );
        assert!(
            parse(r#"{"environment": "zero_gap", "algorithm": "verify", "delta": 1.5}"#).is_err()
        );
        assert!(
            parse(r#"{"environment": "zero_gap", "algorithm": "verify", "bogus": 1}"#).is_err()
        );
        assert!(
            parse(r#"{"environment": {"grid": {"widht": 3}}, "algorithm": "verify"}"#).is_err()
        );
    }

    #[test]
    fn relative_paths_follow_the_config() {
        let mut cfg = parse(
            r#"{"environment": {"game": "g.json"}, "algorithm": "verify", "init": {"file": "p.json"}}"#,
        )
        .unwrap();
        cfg.resolve(Path::new("/tmp/x"));
        assert!(
            matches!(&cfg.environment, EnvironmentSpec::Game(GameSource::Path(p)) if p == Path::new("/tmp/x/g.json"))
        );
        assert!(matches!(&cfg.init, InitSpec::File(p) if p == Path::new("/tmp/x/p.json")));
    }

    #[test]
    fn builds_every_builtin() {
        for text in [
            r#""counterexample""#,
            r#""zero_gap""#,
            r#"{"congestion": {"n_agents": 3}}"#,
        ] {
            let spec: EnvironmentSpec = serde_json::from_str(text).unwrap();
            spec.build().unwrap();
        }
        let spec: EnvironmentSpec = serde_json::from_str(
            r#"{"bimatrix": {"reward": [[1, 0], [0, 1]], "cost": [[0, 0], [0, 0]], "alpha": 0.5}}"#,
        )
        .unwrap();
        assert!(spec.build().unwrap().bimatrix.is_some());
    }
}
