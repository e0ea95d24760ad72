use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::formula::EnsembleSpec;
use crate::linalg::FieldSpec;
use crate::sampler::{mix64, EntryMap};

pub const DEFAULT_RANK_TOLERANCE: f64 = 0.02;
pub const DEFAULT_CORE_TOLERANCE: f64 = 0.01;
pub const DEFAULT_INVARIANCE_TOLERANCE: f64 = 0.02;

/// Which campaign to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CheckKind {
    Verify,
    Invariance,
    Core,
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckKind::Verify => "verify",
            CheckKind::Invariance => "invariance",
            CheckKind::Core => "core",
        })
    }
}

impl FromStr for CheckKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "verify" => Ok(CheckKind::Verify),
            "invariance" => Ok(CheckKind::Invariance),
            "core" => Ok(CheckKind::Core),
            other => Err(Error::InvalidArgument(format!("unknown check {other:?}"))),
        }
    }
}

/// A field as written in a config: explicit, or a rational proxy whose prime
/// is fixed by the master seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldChoice {
    Fixed(FieldSpec),
    SeededRational,
}

impl FieldChoice {
    pub fn resolve(self, seed: u64) -> FieldSpec {
        match self {
            FieldChoice::Fixed(f) => f,
            FieldChoice::SeededRational => {
                FieldSpec::random_rational_proxy(&mut ChaCha8Rng::seed_from_u64(mix64(seed ^ 0xF1E1D)))
            }
        }
    }
}

impl FromStr for FieldChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim() == "rational" {
            Ok(FieldChoice::SeededRational)
        } else {
            s.parse().map(FieldChoice::Fixed)
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub ensemble: EnsembleSpec,
    pub n: usize,
    pub trials: usize,
    pub fields: Vec<FieldSpec>,
    pub entries: Vec<EntryMap>,
    pub checks: Vec<CheckKind>,
    pub seed: u64,
    pub rank_tolerance: f64,
    pub core_tolerance: f64,
    pub invariance_tolerance: f64,
    /// Reject multi-edges when sampling graphs.
    pub simple: bool,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    /// GF(2), all-ones entries, every check, default tolerances.
    pub fn new(ensemble: EnsembleSpec, n: usize, trials: usize, seed: u64) -> Self {
        ExperimentConfig {
            ensemble,
            n,
            trials,
            fields: vec![FieldSpec::Prime(2)],
            entries: vec![EntryMap::AllOnes],
            checks: vec![CheckKind::Verify],
            seed,
            rank_tolerance: DEFAULT_RANK_TOLERANCE,
            core_tolerance: DEFAULT_CORE_TOLERANCE,
            invariance_tolerance: DEFAULT_INVARIANCE_TOLERANCE,
            simple: true,
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 || self.n == 0 {
            return Err(Error::InvalidArgument("trials and n must be at least 1".into()));
        }
        let tolerances = [self.rank_tolerance, self.core_tolerance, self.invariance_tolerance];
        if tolerances.iter().any(|&t| !(t > 0.0)) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        if self.fields.is_empty() || self.entries.is_empty() {
            return Err(Error::InvalidArgument("need at least one field and entry map".into()));
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        std::fs::read_to_string(path)?.parse()
    }
}

fn list<T: FromStr<Err = Error>>(value: &str) -> Result<Vec<T>> {
    value.split(',').filter(|s| !s.trim().is_empty()).map(|s| s.trim().parse()).collect()
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    /// `key = value` lines; `#` starts a comment. `ensemble` and `n` are required.
    fn from_str(text: &str) -> Result<Self> {
        let mut ensemble = None;
        let mut n = None;
        let mut trials = 20;
        let mut fields = vec![FieldChoice::Fixed(FieldSpec::Prime(2))];
        let mut entries = vec![EntryMap::AllOnes];
        let mut checks = vec![CheckKind::Verify];
        let mut seed = 0u64;
        let mut tol = [DEFAULT_RANK_TOLERANCE, DEFAULT_CORE_TOLERANCE, DEFAULT_INVARIANCE_TOLERANCE];
        let mut simple = true;
        let mut output = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse { line: idx + 1, msg };
            let (key, value) = line.split_once('=').ok_or_else(|| err("expected key = value".into()))?;
            let value = value.trim();
            let num = |what: &str| err(format!("bad {what} {value:?}"));
            match key.trim() {
                "ensemble" => ensemble = Some(value.parse::<EnsembleSpec>().map_err(|e| err(e.to_string()))?),
                "n" => n = Some(value.parse().map_err(|_| num("n"))?),
                "trials" => trials = value.parse().map_err(|_| num("trials"))?,
                "fields" | "field" => fields = list(value).map_err(|e| err(e.to_string()))?,
                "entries" => entries = list(value).map_err(|e| err(e.to_string()))?,
                "checks" => checks = list(value).map_err(|e| err(e.to_string()))?,
                "seed" => seed = value.parse().map_err(|_| num("seed"))?,
                "rank_tolerance" => tol[0] = value.parse().map_err(|_| num("tolerance"))?,
                "core_tolerance" => tol[1] = value.parse().map_err(|_| num("tolerance"))?,
                "invariance_tolerance" => tol[2] = value.parse().map_err(|_| num("tolerance"))?,
                "simple" => simple = value.parse().map_err(|_| num("flag"))?,
                "output" => output = Some(PathBuf::from(value)),
                other => return Err(err(format!("unknown key {other:?}"))),
            }
        }
        let missing = |k: &str| Error::Parse { line: 0, msg: format!("missing key {k:?}") };
        let cfg = ExperimentConfig {
            ensemble: ensemble.ok_or_else(|| missing("ensemble"))?,
            n: n.ok_or_else(|| missing("n"))?,
            trials,
            fields: fields.into_iter().map(|f| f.resolve(seed)).collect(),
            entries,
            checks,
            seed,
            rank_tolerance: tol[0],
            core_tolerance: tol[1],
            invariance_tolerance: tol[2],
            simple,
            output,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_keys() {
        let text = "# campaign\nensemble = po:2;point:3\nn = 500\ntrials = 4\nfields = 2, gf(5), rational\n\
                    entries = ones, chi:7\nchecks = verify, core\nseed = 9\nrank_tolerance = 0.05\n\
                    simple = false\noutput = out.csv  # here\n";
        let cfg: ExperimentConfig = text.parse().unwrap();
        assert_eq!(cfg.n, 500);
        assert_eq!(cfg.trials, 4);
        assert_eq!(cfg.fields[..2], [FieldSpec::Prime(2), FieldSpec::Prime(5)]);
        assert!(matches!(cfg.fields[2], FieldSpec::RationalProxy(_)));
        assert_eq!(cfg.entries, vec![EntryMap::AllOnes, EntryMap::Seeded2D(7)]);
        assert_eq!(cfg.checks, vec![CheckKind::Verify, CheckKind::Core]);
        assert_eq!(cfg.rank_tolerance, 0.05);
        assert_eq!(cfg.core_tolerance, DEFAULT_CORE_TOLERANCE);
        assert!(!cfg.simple);
        assert_eq!(cfg.output.as_deref(), Some(Path::new("out.csv")));
        let again: ExperimentConfig = text.parse().unwrap();
        assert_eq!(again.fields, cfg.fields);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!("n = 10".parse::<ExperimentConfig>().is_err());
        assert!("ensemble = point:2;point:2\nn = 10\ntrials = 0".parse::<ExperimentConfig>().is_err());
        assert!("ensemble = point:2;point:2\nn = 10\nrank_tolerance = 0".parse::<ExperimentConfig>().is_err());
        match "ensemble = point:2;point:2\nn = 10\nbogus = 1".parse::<ExperimentConfig>() {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }
}
