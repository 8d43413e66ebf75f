//! Plain-text key-value configuration files for the simulate and power
//! commands.
//!
//! Format: one `key = value` pair per line; `#` starts a comment; blank lines
//! ignored. Unknown keys are errors so typos surface immediately.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use cspr_core::simulate::CliqueEnergy;

fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("line {}: expected 'key = value', got '{raw}'", lineno + 1);
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn take<T: std::str::FromStr>(
    map: &mut BTreeMap<String, String>,
    key: &str,
    default: T,
) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    match map.remove(key) {
        Some(v) => v
            .parse()
            .map_err(|e| anyhow::anyhow!("config key '{key}': {e}")),
        None => Ok(default),
    }
}

fn take_required<T: std::str::FromStr>(map: &mut BTreeMap<String, String>, key: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    match map.remove(key) {
        Some(v) => v
            .parse()
            .map_err(|e| anyhow::anyhow!("config key '{key}': {e}")),
        None => bail!("missing required config key '{key}'"),
    }
}

fn reject_unknown(map: &BTreeMap<String, String>) -> Result<()> {
    if let Some(key) = map.keys().next() {
        bail!("unknown config key '{key}'");
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    MarkovUniform,
    MarkovCompliant,
    MarkovNoncompliant,
    MrfSymmetric,
    MrfAsymmetric,
}

impl std::str::FromStr for ModelKind {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "markov_uniform" => Self::MarkovUniform,
            "markov_compliant" => Self::MarkovCompliant,
            "markov_noncompliant" => Self::MarkovNoncompliant,
            "mrf_symmetric" => Self::MrfSymmetric,
            "mrf_asymmetric" => Self::MrfAsymmetric,
            other => bail!(
                "unknown model '{other}' (expected markov_uniform, markov_compliant, \
                 markov_noncompliant, mrf_symmetric or mrf_asymmetric)"
            ),
        })
    }
}

/// Configuration for `cspr simulate`.
#[derive(Debug, Clone)]
pub struct SimSpec {
    pub model: ModelKind,
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
    /// Seed for the random dinucleotide joint behind Markov models.
    pub joint_seed: u64,
    /// Joint perturbation for the non-compliant chain.
    pub epsilon: f64,
    pub k: usize,
    pub sweeps: usize,
    pub energy_scale: f64,
    pub energy_seed: u64,
    /// Potential added to the all-A word of the largest clique for the
    /// asymmetric field.
    pub perturbation: f64,
    /// Explicit potential tables, bypassing the random energy.
    pub tables: Option<Vec<Vec<f64>>>,
}

impl SimSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = parse_kv(text)?;
        let model: ModelKind = take_required(&mut map, "model")?;
        let spec = SimSpec {
            model,
            n: take_required(&mut map, "n")?,
            replicates: take(&mut map, "replicates", 1)?,
            seed: take(&mut map, "seed", 0)?,
            joint_seed: take(&mut map, "joint_seed", 12345)?,
            epsilon: take(&mut map, "epsilon", 0.05)?,
            k: take(&mut map, "k", 3)?,
            sweeps: take(&mut map, "sweeps", 50)?,
            energy_scale: take(&mut map, "energy_scale", 0.3)?,
            energy_seed: take(&mut map, "energy_seed", 2024)?,
            perturbation: take(&mut map, "perturbation", 0.1)?,
            tables: parse_tables(&mut map)?,
        };
        reject_unknown(&map)?;
        if spec.n < 2 {
            bail!("config key 'n': need at least 2");
        }
        if spec.k == 0 || spec.k > 4 {
            bail!("config key 'k': clique size must lie in 1..=4");
        }
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading spec {}", path.display()))?;
        Self::parse(&text)
    }

    /// The clique energy this spec describes (MRF models only).
    pub fn energy(&self) -> Result<CliqueEnergy> {
        let base = match &self.tables {
            Some(tables) => {
                let e = CliqueEnergy::new(tables.clone())?;
                match self.model {
                    ModelKind::MrfSymmetric => {
                        if !cspr_core::simulate::is_energy_symmetric(&e) {
                            bail!("mrf_symmetric given explicit tables that are not symmetric");
                        }
                        e
                    }
                    _ => e,
                }
            }
            None => CliqueEnergy::random_symmetric(self.k, self.energy_scale, self.energy_seed),
        };
        Ok(match self.model {
            ModelKind::MrfAsymmetric => base.perturbed(base.k(), 0, self.perturbation),
            _ => base,
        })
    }
}

fn parse_tables(map: &mut BTreeMap<String, String>) -> Result<Option<Vec<Vec<f64>>>> {
    let keys: Vec<String> = (1..=4).map(|j| format!("psi{j}")).collect();
    if !keys.iter().any(|k| map.contains_key(k)) {
        return Ok(None);
    }
    let mut tables = Vec::new();
    for (j, key) in keys.iter().enumerate() {
        match map.remove(key) {
            Some(v) => {
                let vals: Vec<f64> = v
                    .split(',')
                    .map(|t| t.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| anyhow::anyhow!("config key '{key}': {e}"))?;
                if vals.len() != 4usize.pow(j as u32 + 1) {
                    bail!(
                        "config key '{key}': expected {} values, got {}",
                        4usize.pow(j as u32 + 1),
                        vals.len()
                    );
                }
                tables.push(vals);
            }
            None => break,
        }
    }
    if tables.is_empty() {
        bail!("potential tables must start at psi1");
    }
    Ok(Some(tables))
}

/// Configuration for `cspr power`.
#[derive(Debug, Clone)]
pub struct PowerSpec {
    pub epsilons: Vec<f64>,
    pub n: usize,
    pub replicates: usize,
    pub alpha: f64,
    pub seed: u64,
    pub joint_seed: u64,
    pub max_m: usize,
    pub threshold_frac: f64,
}

impl PowerSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = parse_kv(text)?;
        let epsilons = match map.remove("epsilons") {
            Some(v) => v
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| anyhow::anyhow!("config key 'epsilons': {e}"))?,
            None => vec![0.0, 0.01, 0.02, 0.05],
        };
        let spec = PowerSpec {
            epsilons,
            n: take_required(&mut map, "n")?,
            replicates: take(&mut map, "replicates", 100)?,
            alpha: take(&mut map, "alpha", 0.05)?,
            seed: take(&mut map, "seed", 0)?,
            joint_seed: take(&mut map, "joint_seed", 12345)?,
            max_m: take(&mut map, "max_m", cspr_core::covariance::DEFAULT_MAX_M)?,
            threshold_frac: take(
                &mut map,
                "threshold_frac",
                cspr_core::covariance::DEFAULT_THRESHOLD_FRAC,
            )?,
        };
        reject_unknown(&map)?;
        if !(0.0..1.0).contains(&spec.alpha) || spec.alpha == 0.0 {
            bail!("config key 'alpha': must lie in (0, 1)");
        }
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading spec {}", path.display()))?;
        Self::parse(&text)
    }
}
