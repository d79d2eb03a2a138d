use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Serialize;

use refocus::designer::SearchConfig;
use refocus::ensemble::RfDistribution;
use refocus::gates::GateSpec;
use refocus::operator::Operator;
use refocus::propagator::PulseSequence;
use refocus::spin_system::SpinSystem;

use crate::artifact::RunManifest;
use crate::error::{CliError, CliResult, Context};

const BUILTIN: &str = "builtin:";

fn read(path: &Path, manifest: &mut RunManifest) -> CliResult<String> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    manifest.read(path);
    Ok(text)
}

/// `builtin:one-spin`, `builtin:two-spin`, `builtin:three-spin` or a JSON file.
pub fn load_system(spec: &str, manifest: &mut RunManifest) -> CliResult<SpinSystem> {
    if let Some(name) = spec.strip_prefix(BUILTIN) {
        return match name {
            "one-spin" => SpinSystem::uncoupled(&[0.0]).context(|| "builtin one-spin".into()),
            "two-spin" => Ok(SpinSystem::example_two_spin()),
            "three-spin" => Ok(SpinSystem::example_three_spin()),
            other => Err(CliError::Validation(format!("unknown builtin system '{other}' (one-spin, two-spin, three-spin)"))),
        };
    }
    let path = Path::new(spec);
    SpinSystem::from_json(&read(path, manifest)?).context(|| path.display().to_string())
}

pub fn load_pulse(path: &Path, manifest: &mut RunManifest) -> CliResult<PulseSequence> {
    PulseSequence::from_json(&read(path, manifest)?).context(|| path.display().to_string())
}

pub fn load_config(path: Option<&Path>, manifest: &mut RunManifest) -> CliResult<SearchConfig> {
    match path {
        Some(p) => SearchConfig::from_json(&read(p, manifest)?).context(|| p.display().to_string()),
        None => Ok(SearchConfig::default()),
    }
}

pub fn target_unitary(gate: &GateSpec, sys: &SpinSystem) -> CliResult<Operator> {
    gate.unitary(sys.n_spins()).context(|| format!("target {gate}"))
}

/// Where the RF profile comes from.
#[derive(Args, Clone, Debug, Serialize)]
pub struct ProfileArgs {
    /// RF distribution JSON, {"bins": [{"scale", "weight"}]}; weights are normalized on import
    #[arg(long, value_name = "FILE")]
    pub profile: Option<PathBuf>,

    /// Use the built-in synthetic nine-bin profile
    #[arg(long, conflicts_with = "profile")]
    pub synthetic_profile: bool,
}

impl ProfileArgs {
    /// `None` when neither flag is given.
    pub fn load(&self, manifest: &mut RunManifest) -> CliResult<Option<RfDistribution>> {
        if self.synthetic_profile {
            return Ok(Some(RfDistribution::synthetic_default()));
        }
        match &self.profile {
            Some(p) => RfDistribution::from_json(&read(p, manifest)?).context(|| p.display().to_string()).map(Some),
            None => Ok(None),
        }
    }

    /// Falls back to the synthetic profile.
    pub fn load_or_synthetic(&self, manifest: &mut RunManifest) -> CliResult<RfDistribution> {
        Ok(self.load(manifest)?.unwrap_or_else(RfDistribution::synthetic_default))
    }
}

/// A list of numbers: `a,b,c` or an inclusive grid `start:stop:count`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(into = "Vec<f64>")]
pub struct Grid(pub Vec<f64>);

impl From<Grid> for Vec<f64> {
    fn from(g: Grid) -> Self {
        g.0
    }
}

impl std::str::FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("'{t}' is not a number"));
        let values = if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            let [a, b, n] = parts[..] else {
                return Err(format!("'{s}': expected start:stop:count"));
            };
            let (a, b) = (num(a)?, num(b)?);
            let n: usize = n.trim().parse().map_err(|_| format!("'{n}' is not a count"))?;
            match n {
                0 => return Err("grid count must be positive".into()),
                1 => vec![a],
                _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
            }
        } else {
            s.split(',').map(num).collect::<Result<Vec<_>, _>>()?
        };
        if values.iter().any(|v| !v.is_finite()) {
            return Err("grid values must be finite".into());
        }
        Ok(Grid(values))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_parse_both_forms() {
        assert_eq!("0.9:1.1:3".parse::<Grid>().unwrap().0.len(), 3);
        let g: Grid = "0:1:5".parse().unwrap();
        assert_eq!(g.0, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!("1,2.5".parse::<Grid>().unwrap().0, vec![1.0, 2.5]);
        assert!("1:2".parse::<Grid>().is_err());
        assert!("a,b".parse::<Grid>().is_err());
        assert!("0:1:0".parse::<Grid>().is_err());
    }
}
