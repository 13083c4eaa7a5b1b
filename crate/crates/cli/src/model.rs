//! Model-file parsing: TOML documents with explicit row-major matrix
//! literals, parsed into core types.

use anyhow::{Context, Result, anyhow, bail};
use domcheck_core::core::{Belief, StateLevels, StochasticMatrix};
use domcheck_core::densities::{NoiseFamily, discretize_to_kernel};
use domcheck_core::pomdp::PomdpModel;
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDoc {
    pub states: StatesSection,
    pub transition: Option<TransitionSection>,
    #[serde(default)]
    pub sensors: Vec<SensorSection>,
    pub pomdp: Option<PomdpSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatesSection {
    pub count: usize,
    /// Physical state values g(x); defaults to 1..count.
    pub levels: Option<Vec<f64>>,
    /// Initial belief; defaults to uniform.
    pub prior: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionSection {
    pub identity: Option<bool>,
    pub matrix: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorSection {
    pub name: String,
    /// matrix | gaussian | exponential | gamma | powerlaw | uniform |
    /// grid-density
    pub kind: String,
    pub rows: Option<Vec<Vec<f64>>>,
    pub sigma: Option<f64>,
    pub rate: Option<f64>,
    pub shape: Option<f64>,
    pub alpha: Option<f64>,
    pub width: Option<f64>,
    /// Tabulated noise pdf for kind = "grid-density".
    pub pdf: Option<Vec<f64>>,
    /// Observation binning for the continuous kinds.
    pub grid: Option<GridSection>,
}

#[derive(Debug, Deserialize, Clone, Copy)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PomdpSection {
    /// One reward vector (length 2) per sensor, in sensor order.
    pub rewards: Vec<Vec<f64>>,
    pub discount: f64,
    pub horizon: Option<usize>,
    pub terminal_reward: Option<Vec<f64>>,
}

/// A fully validated model: core types ready for the checkers.
pub struct Model {
    pub levels: StateLevels,
    pub prior: Belief,
    pub transition: Option<StochasticMatrix>,
    pub sensors: Vec<(String, StochasticMatrix)>,
    pub pomdp: Option<PomdpSection>,
}

impl Model {
    pub fn sensor(&self, name: &str) -> Result<&StochasticMatrix> {
        self.sensors
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m)
            .ok_or_else(|| {
                anyhow!(
                    "unknown sensor {name:?}; available: {}",
                    self.sensors
                        .iter()
                        .map(|(n, _)| n.as_str())
                        .collect::<Vec<_>>()
                        .join(", ")
                )
            })
    }

    /// Transition matrix, defaulting to identity (localization).
    pub fn transition_or_identity(&self) -> StochasticMatrix {
        self.transition
            .clone()
            .unwrap_or_else(|| StochasticMatrix::identity(self.levels.len()))
    }

    pub fn build_pomdp(&self, discount_override: Option<f64>) -> Result<PomdpModel> {
        let sect = self
            .pomdp
            .as_ref()
            .ok_or_else(|| anyhow!("model file has no [pomdp] section"))?;
        if sect.rewards.len() != self.sensors.len() {
            bail!(
                "{} reward vectors for {} sensors",
                sect.rewards.len(),
                self.sensors.len()
            );
        }
        let mut rewards = Vec::new();
        for r in &sect.rewards {
            let [a, b] = r.as_slice() else {
                bail!("each reward vector must have exactly 2 entries");
            };
            rewards.push([*a, *b]);
        }
        let kernels: Vec<StochasticMatrix> =
            self.sensors.iter().map(|(_, m)| m.clone()).collect();
        let mut model = PomdpModel::new(
            self.transition_or_identity(),
            kernels,
            rewards,
            discount_override.unwrap_or(sect.discount),
        )?;
        if let Some(n) = sect.horizon {
            let term = match &sect.terminal_reward {
                Some(t) if t.len() == 2 => [t[0], t[1]],
                Some(_) => bail!("terminal_reward must have exactly 2 entries"),
                None => [0.0, 0.0],
            };
            model = model.with_horizon(n, term);
        }
        Ok(model)
    }
}

fn build_sensor(s: &SensorSection, levels: &StateLevels) -> Result<StochasticMatrix> {
    let ctx = |what: &str| format!("sensor {:?}: {what}", s.name);
    let need_grid = || {
        s.grid
            .ok_or_else(|| anyhow!(ctx("continuous kind requires grid = {{ lo, hi, bins }}")))
    };
    let noise = match s.kind.as_str() {
        "matrix" => {
            let rows = s
                .rows
                .as_ref()
                .ok_or_else(|| anyhow!(ctx("kind \"matrix\" requires rows")))?;
            let m = StochasticMatrix::new(rows).with_context(|| ctx("invalid matrix"))?;
            if m.rows() != levels.len() {
                bail!(ctx(&format!(
                    "matrix has {} rows but the model has {} states",
                    m.rows(),
                    levels.len()
                )));
            }
            return Ok(m);
        }
        "gaussian" => NoiseFamily::gaussian(
            s.sigma.ok_or_else(|| anyhow!(ctx("gaussian requires sigma")))?,
        )?,
        "exponential" => NoiseFamily::exponential(
            s.rate.ok_or_else(|| anyhow!(ctx("exponential requires rate")))?,
        )?,
        "gamma" => {
            NoiseFamily::gamma(s.shape.ok_or_else(|| anyhow!(ctx("gamma requires shape")))?)?
        }
        "powerlaw" => NoiseFamily::power_law(
            s.alpha.ok_or_else(|| anyhow!(ctx("powerlaw requires alpha")))?,
        )?,
        "uniform" => NoiseFamily::uniform(
            s.width.ok_or_else(|| anyhow!(ctx("uniform requires width")))?,
        )?,
        "grid-density" => {
            let g = need_grid()?;
            let pdf = s
                .pdf
                .as_ref()
                .ok_or_else(|| anyhow!(ctx("grid-density requires pdf")))?;
            // bin the tabulated density directly: mass of cell j for state x
            // is pdf evaluated at the cell midpoint shifted by g(x)
            return tabulated_kernel(pdf, g, levels).with_context(|| ctx("invalid pdf table"));
        }
        other => bail!(ctx(&format!("unknown kind {other:?}"))),
    };
    let g = need_grid()?;
    let d = discretize_to_kernel(&noise, levels, g.lo, g.hi, g.bins)
        .with_context(|| ctx("discretization failed"))?;
    Ok(d.kernel)
}

fn tabulated_kernel(
    pdf: &[f64],
    grid: GridSection,
    levels: &StateLevels,
) -> Result<StochasticMatrix> {
    if pdf.len() < 2 {
        bail!("pdf table needs at least 2 points");
    }
    let n = pdf.len();
    let span = grid.hi - grid.lo;
    let value_at = |w: f64| -> f64 {
        let t = (w - grid.lo) / span * (n - 1) as f64;
        if !(0.0..=(n - 1) as f64).contains(&t) {
            return 0.0;
        }
        let i = (t.floor() as usize).min(n - 2);
        let frac = t - i as f64;
        pdf[i] * (1.0 - frac) + pdf[i + 1] * frac
    };
    let cell = span / grid.bins as f64;
    let mut rows = Vec::with_capacity(levels.len());
    for &gx in levels.values() {
        let row: Vec<f64> = (0..grid.bins)
            .map(|j| {
                let y_mid = grid.lo + (j as f64 + 0.5) * cell;
                value_at(y_mid - gx).max(0.0)
            })
            .collect();
        rows.push(row);
    }
    Ok(StochasticMatrix::new_renormalized(&rows)?)
}

pub fn parse_model(text: &str) -> Result<Model> {
    let doc: ModelDoc = toml::from_str(text).context("model file parse error")?;
    if doc.states.count == 0 {
        bail!("states.count must be positive");
    }
    let levels = StateLevels::new(match &doc.states.levels {
        Some(l) => {
            if l.len() != doc.states.count {
                bail!(
                    "states.levels has {} entries for count = {}",
                    l.len(),
                    doc.states.count
                );
            }
            l.clone()
        }
        None => (1..=doc.states.count).map(|i| i as f64).collect(),
    })?;
    let prior = match &doc.states.prior {
        Some(p) => Belief::new(p.clone()).context("states.prior")?,
        None => Belief::uniform(doc.states.count),
    };
    let transition = match &doc.transition {
        Some(t) => match (&t.identity, &t.matrix) {
            (Some(true), None) => Some(StochasticMatrix::identity(doc.states.count)),
            (None | Some(false), Some(m)) => {
                let m = StochasticMatrix::new(m).context("transition.matrix")?;
                if m.rows() != doc.states.count || m.cols() != doc.states.count {
                    bail!("transition matrix must be {0}x{0}", doc.states.count);
                }
                Some(m)
            }
            _ => bail!("transition needs exactly one of identity = true or matrix = [...]"),
        },
        None => None,
    };
    let mut sensors = Vec::new();
    for s in &doc.sensors {
        if sensors.iter().any(|(n, _): &(String, _)| n == &s.name) {
            bail!("duplicate sensor name {:?}", s.name);
        }
        sensors.push((s.name.clone(), build_sensor(s, &levels)?));
    }
    Ok(Model { levels, prior, transition, sensors, pomdp: doc.pomdp })
}

pub fn load_model(path: &std::path::Path) -> Result<(Model, Vec<u8>)> {
    let bytes = std::fs::read(path)
        .with_context(|| format!("cannot read model file {}", path.display()))?;
    let text = std::str::from_utf8(&bytes).context("model file is not UTF-8")?;
    Ok((parse_model(text)?, bytes))
}
