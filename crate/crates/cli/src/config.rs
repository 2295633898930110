//! JSON run configuration.
//!
//! ```json
//! {
//!   "name": "fig7b",
//!   "graph": { "family": "cycle", "n": 4 },
//!   "pattern": [[1, 1], [0.5, 1]],
//!   "delays": { "tau1": 0.2, "tau2": 0.2 },
//!   "simulation": { "horizon": 60, "seed": 7 }
//! }
//! ```
//!
//! `graph` takes either `family` + `n` or `n` + a 1-based `edges` list.
//! `grid` takes either `equal` (tau1 = tau2) or both `tau1` and `tau2`.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use mlcons::{DelayPair, Graph, History, InteractionPattern};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub graph: GraphSpec,
    /// Row-major, unit diagonal.
    pub pattern: Vec<Vec<f64>>,
    #[serde(default)]
    pub delays: Option<DelaysSpec>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub simulation: SimulationSpec,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphFamily {
    Cycle,
    Path,
    Complete,
    Star,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub n: usize,
    #[serde(default)]
    pub family: Option<GraphFamily>,
    /// 1-based vertex pairs.
    #[serde(default)]
    pub edges: Option<Vec<[usize; 2]>>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelaysSpec {
    pub tau1: f64,
    pub tau2: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec {
    pub min: f64,
    pub max: f64,
    /// Number of grid points, endpoints included.
    pub points: usize,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default)]
    pub equal: Option<RangeSpec>,
    #[serde(default)]
    pub tau1: Option<RangeSpec>,
    #[serde(default)]
    pub tau2: Option<RangeSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSpec {
    pub horizon: f64,
    pub step: f64,
    /// Seeds the random initial state when `x0` is absent.
    pub seed: u64,
    /// One row of `d` values per agent.
    pub x0: Option<Vec<Vec<f64>>>,
    pub history: History,
    /// Keep every k-th integration step in the trajectory output.
    pub record_every: usize,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        Self {
            horizon: mlcons::sim::DEFAULT_HORIZON,
            step: mlcons::sim::DEFAULT_STEP,
            seed: 0,
            x0: None,
            history: History::Constant,
            record_every: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub convergence_eps: f64,
    pub convergence_window: f64,
    /// The oracle calls a case stable when the rightmost root is below `-oracle_margin`.
    pub oracle_margin: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            convergence_eps: mlcons::sim::CONVERGENCE_EPS,
            convergence_window: mlcons::sim::CONVERGENCE_WINDOW,
            oracle_margin: mlcons::quasipoly::STABLE_MARGIN,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("config {}", path.display()))
    }

    /// Parses and validates; errors name the offending field and position.
    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            anyhow::anyhow!("field `{path}`: {}", e.into_inner())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        self.build_graph()?;
        self.build_pattern()?;
        if let Some(d) = self.delays {
            DelayPair::new(d.tau1, d.tau2).context("field `delays`")?;
        }
        if let Some(g) = &self.grid {
            g.points().context("field `grid`")?;
        }
        let s = &self.simulation;
        ensure!(s.step > 0.0 && s.step.is_finite(), "field `simulation.step`: must be positive");
        ensure!(s.horizon >= s.step, "field `simulation.horizon`: must be at least one step");
        ensure!(s.record_every >= 1, "field `simulation.record_every`: must be >= 1");
        if let Some(x0) = &s.x0 {
            let (n, d) = (self.graph.n, self.pattern.len());
            ensure!(
                x0.len() == n && x0.iter().all(|r| r.len() == d),
                "field `simulation.x0`: expected {n} rows of {d} values"
            );
        }
        let t = &self.tolerances;
        ensure!(t.convergence_eps > 0.0, "field `tolerances.convergence_eps`: must be positive");
        ensure!(t.convergence_window > 0.0, "field `tolerances.convergence_window`: must be positive");
        ensure!(t.oracle_margin >= 0.0, "field `tolerances.oracle_margin`: must be non-negative");
        Ok(())
    }

    pub fn display_name(&self) -> &str {
        self.name.as_deref().unwrap_or("run")
    }

    pub fn build_graph(&self) -> Result<Graph> {
        let g = &self.graph;
        let graph = match (g.family, &g.edges) {
            (Some(_), Some(_)) => bail!("field `graph`: give either `family` or `edges`, not both"),
            (None, None) => bail!("field `graph`: needs `family` or `edges`"),
            (Some(GraphFamily::Cycle), None) => Graph::cycle(g.n),
            (Some(GraphFamily::Path), None) => Graph::path(g.n),
            (Some(GraphFamily::Complete), None) => Graph::complete(g.n),
            (Some(GraphFamily::Star), None) => Graph::star(g.n),
            (None, Some(edges)) => {
                if let Some(k) = edges.iter().position(|e| e.contains(&0)) {
                    bail!("field `graph.edges[{k}]`: vertices are numbered from 1");
                }
                Graph::new(g.n, edges.iter().map(|[i, j]| (i - 1, j - 1)))
            }
        };
        graph.context("field `graph`")
    }

    pub fn build_pattern(&self) -> Result<InteractionPattern> {
        InteractionPattern::from_rows(&self.pattern).context("field `pattern`")
    }

    pub fn delays(&self) -> Result<DelayPair> {
        let d = self.delays.context("field `delays`: required for this command")?;
        Ok(DelayPair::new(d.tau1, d.tau2)?)
    }

    /// Agent-major initial state, or `None` to draw it from the seed.
    pub fn x0(&self) -> Option<Vec<f64>> {
        self.simulation.x0.as_ref().map(|rows| rows.concat())
    }
}

impl RangeSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        ensure!(self.min.is_finite() && self.max.is_finite(), "bounds must be finite");
        ensure!(self.min >= 0.0, "delays must be non-negative");
        ensure!(self.min <= self.max, "min {} exceeds max {}", self.min, self.max);
        ensure!(self.points >= 1, "points must be >= 1");
        if self.points == 1 {
            ensure!(self.min == self.max, "a single point needs min == max");
            return Ok(vec![self.min]);
        }
        let h = (self.max - self.min) / (self.points - 1) as f64;
        Ok((0..self.points)
            .map(|k| if k + 1 == self.points { self.max } else { self.min + k as f64 * h })
            .collect())
    }
}

impl GridSpec {
    /// Grid points in row-major order (tau1 outer, tau2 inner).
    pub fn points(&self) -> Result<Vec<DelayPair>> {
        let pairs: Vec<(f64, f64)> = match (self.equal, self.tau1, self.tau2) {
            (Some(e), None, None) => e.values()?.into_iter().map(|t| (t, t)).collect(),
            (None, Some(a), Some(b)) => {
                let (a, b) = (a.values()?, b.values()?);
                a.iter().flat_map(|&x| b.iter().map(move |&y| (x, y))).collect()
            }
            _ => bail!("give either `equal` or both `tau1` and `tau2`"),
        };
        pairs
            .into_iter()
            .map(|(a, b)| DelayPair::new(a, b).map_err(Into::into))
            .collect()
    }
}
