use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::CliError;
use crate::mixing::{KickSource, KickedSystemSpec, Observable};
use crate::qmorph::EngineConfig;
use crate::sl2core::UnimodularMatrix;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub system: SystemSection,
    pub kicks: KicksSection,
    pub observable: ObservableSection,
    pub engine: EngineConfig,
    pub qm: QmSection,
    pub growth: GrowthSection,
    pub output: OutputSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSection {
    pub h: String,
    /// First kick period tried.
    pub t: u32,
    /// Last kick period tried when searching for a period that mixes the probe.
    pub t_max: u32,
    pub n_max: usize,
    pub trace_bound: u64,
    /// Radius of the vector scan reported as `min_expansion`.
    pub v_max: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KickKind {
    None,
    Alphabet,
    Periodic,
    List,
    File,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KicksSection {
    pub kind: KickKind,
    /// Matrices as `"a,b,c,d"`, for `alphabet`, `periodic` and `list`.
    pub matrices: Vec<String>,
    /// JSON-lines file, one matrix per line, for `file`.
    pub file: Option<PathBuf>,
    /// Replays the file periodically instead of failing when it runs out.
    pub repeat: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservableKind {
    Cos,
    Random,
    Holder,
    File,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObservableSection {
    pub kind: ObservableKind,
    /// Frequency of the `cos` probe.
    pub v: [i64; 2],
    /// Support radius for `random`, materialization radius for `holder`.
    pub radius: i64,
    pub c: f64,
    pub gamma: f64,
    pub file: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QmSection {
    pub n_max: u32,
    /// Elements to evaluate; empty means `h` itself.
    pub g: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrowthSection {
    pub lip_const: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// `None` writes to standard output.
    pub out: Option<PathBuf>,
}

impl Default for SystemSection {
    fn default() -> Self {
        Self {
            h: "4,9,7,16".into(),
            t: 2,
            t_max: 2,
            n_max: 20,
            trace_bound: 2,
            v_max: 10,
        }
    }
}

impl Default for KicksSection {
    fn default() -> Self {
        Self {
            kind: KickKind::Alphabet,
            matrices: vec!["1,1,0,1".into(), "1,0,1,1".into(), "0,1,-1,0".into()],
            file: None,
            repeat: false,
        }
    }
}

impl Default for ObservableSection {
    fn default() -> Self {
        Self {
            kind: ObservableKind::Random,
            v: [1, 0],
            radius: 8,
            c: 1.0,
            gamma: 0.5,
            file: None,
        }
    }
}

impl Default for QmSection {
    fn default() -> Self {
        Self {
            n_max: 128,
            g: Vec::new(),
        }
    }
}

impl Default for GrowthSection {
    fn default() -> Self {
        Self {
            lip_const: crate::growth::DEFAULT_LIP_CONST,
        }
    }
}

pub(crate) fn parse_matrix(s: &str) -> Result<UnimodularMatrix, CliError> {
    s.parse::<UnimodularMatrix>()
        .map_err(|e| CliError::Config(format!("matrix {s:?}: {e}")))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is serializable")
    }

    /// The TOML embedded in output headers: everything but the output
    /// destination, so that redirecting a run does not change its bytes.
    pub fn canonical_toml(&self) -> String {
        let mut c = self.clone();
        c.output = OutputSection::default();
        c.to_toml()
    }

    /// SHA-256 of [`Self::canonical_toml`].
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_toml().as_bytes()))
    }

    pub fn h(&self) -> Result<UnimodularMatrix, CliError> {
        parse_matrix(&self.system.h)
    }

    fn matrices(&self) -> Result<Vec<UnimodularMatrix>, CliError> {
        self.kicks
            .matrices
            .iter()
            .map(|s| parse_matrix(s))
            .collect()
    }

    pub fn kick_source(&self) -> Result<KickSource, CliError> {
        Ok(match self.kicks.kind {
            KickKind::None => KickSource::None,
            KickKind::Alphabet => KickSource::Alphabet {
                alphabet: self.matrices()?,
                seed: self.seed,
            },
            KickKind::Periodic => KickSource::Periodic {
                kicks: self.matrices()?,
            },
            KickKind::List => KickSource::List {
                kicks: self.matrices()?,
            },
            KickKind::File => {
                let path = self
                    .kicks
                    .file
                    .as_ref()
                    .ok_or_else(|| CliError::Config("kicks.file is not set".into()))?;
                let kicks = read_kick_file(path)?;
                if self.kicks.repeat {
                    KickSource::Periodic { kicks }
                } else {
                    KickSource::List { kicks }
                }
            }
        })
    }

    pub fn system_spec(&self, t: u32) -> Result<KickedSystemSpec, CliError> {
        Ok(KickedSystemSpec {
            h: self.h()?,
            t,
            kicks: self.kick_source()?,
            trace_bound: self.system.trace_bound,
        })
    }

    pub fn observable(&self) -> Result<Observable, CliError> {
        let o = &self.observable;
        let math = |e: crate::mixing::MixError| CliError::Config(e.to_string());
        match o.kind {
            ObservableKind::Cos => {
                if o.v == [0, 0] {
                    return Err(CliError::Config("observable.v must be nonzero".into()));
                }
                Ok(Observable::cos_mode(o.v[0], o.v[1]))
            }
            ObservableKind::Random => {
                use rand::SeedableRng;
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(self.seed ^ 0x0b5e_7ab1e);
                Ok(Observable::random_real(&mut rng, o.radius))
            }
            ObservableKind::Holder => {
                Observable::holder_profile(o.c, o.gamma, o.radius).map_err(math)
            }
            ObservableKind::File => {
                let path = o
                    .file
                    .as_ref()
                    .ok_or_else(|| CliError::Config("observable.file is not set".into()))?;
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                Observable::from_json(&text).map_err(math)
            }
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.system.t == 0 || self.system.t_max < self.system.t {
            return Err(CliError::Config(
                "need 1 <= system.t <= system.t_max".into(),
            ));
        }
        if self.system.n_max == 0 {
            return Err(CliError::Config("system.n_max must be at least 1".into()));
        }
        if self.qm.n_max < 4 {
            return Err(CliError::Config("qm.n_max must be at least 4".into()));
        }
        if !(self.engine.tol > 0.0) {
            return Err(CliError::Config("engine.tol must be positive".into()));
        }
        if !(self.growth.lip_const > 0.0) {
            return Err(CliError::Config("growth.lip_const must be positive".into()));
        }
        self.h()?;
        Ok(())
    }
}

/// One matrix per line, either `"a,b,c,d"` as a JSON string or `[a,b,c,d]`.
pub fn read_kick_file(path: &Path) -> Result<Vec<UnimodularMatrix>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let bad = |e: String| CliError::Config(format!("{}:{}: {e}", path.display(), i + 1));
        let m = if line.starts_with('[') {
            let v: [i64; 4] = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
            UnimodularMatrix::from_i64(v[0], v[1], v[2], v[3]).map_err(|e| bad(e.to_string()))?
        } else {
            serde_json::from_str::<UnimodularMatrix>(line).map_err(|e| bad(e.to_string()))?
        };
        out.push(m);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = ExperimentConfig::default();
        let back = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
        c.validate().unwrap();
    }

    #[test]
    fn partial_config_fills_defaults() {
        let c = ExperimentConfig::from_toml("seed = 7\n[system]\nh = \"2,1,1,1\"\n").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.system.t, 2);
        assert!(ExperimentConfig::from_toml("[system]\nbogus = 1\n").is_err());
    }

    #[test]
    fn kick_file_formats() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("k.jsonl");
        std::fs::write(&p, "\"1,1,0,1\"\n[1,0,1,1]\n\n").unwrap();
        let k = read_kick_file(&p).unwrap();
        assert_eq!(k.len(), 2);
        std::fs::write(&p, "[1,1,1,1]\n").unwrap();
        assert!(read_kick_file(&p).is_err());
    }
}
