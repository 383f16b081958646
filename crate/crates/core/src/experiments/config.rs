//! Experiment identifiers and their flag-style parameters.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Default seed for every experiment.
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExperimentId {
    BoundaryEffect,
    AscCurves,
    DiscreteAsc,
    SourceGrowth,
    RateTable,
    HighOrderSaturation,
    OversmoothingRate,
    LandweberVsTikhonov,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 8] = [
        ExperimentId::BoundaryEffect,
        ExperimentId::AscCurves,
        ExperimentId::DiscreteAsc,
        ExperimentId::SourceGrowth,
        ExperimentId::RateTable,
        ExperimentId::HighOrderSaturation,
        ExperimentId::OversmoothingRate,
        ExperimentId::LandweberVsTikhonov,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentId::BoundaryEffect => "boundary_effect",
            ExperimentId::AscCurves => "asc_curves",
            ExperimentId::DiscreteAsc => "discrete_asc",
            ExperimentId::SourceGrowth => "source_growth",
            ExperimentId::RateTable => "rate_table",
            ExperimentId::HighOrderSaturation => "high_order_saturation",
            ExperimentId::OversmoothingRate => "oversmoothing_rate",
            ExperimentId::LandweberVsTikhonov => "landweber_vs_tikhonov",
        }
    }

    pub fn params(&self) -> &'static [ParamSpec] {
        use Kind::*;
        const DELTA_SWEEP: &str = "0.01,0.0031622776601683794,0.001,0.00031622776601683794,0.0001,3.1622776601683795e-5,1e-5";
        match self {
            ExperimentId::BoundaryEffect => {
                const T: &[ParamSpec] = &[
                    ParamSpec::new("n", Int, "64", "grid size"),
                    ParamSpec::new(
                        "solution",
                        Choice(&["constant_one", "linear_t"]),
                        "constant_one",
                        "exact solution",
                    ),
                    ParamSpec::new("normalize", Bool, "false", "scale the operator to norm one"),
                    ParamSpec::new(
                        "deltas",
                        RealList,
                        "0,0.0005,0.005,0.05",
                        "relative noise levels",
                    ),
                    ParamSpec::new("alpha-min", Real, "1e-10", "smallest grid alpha"),
                    ParamSpec::new("alpha-max", Real, "1", "largest grid alpha"),
                    ParamSpec::new("alpha-count", Int, "300", "oracle grid size"),
                    ParamSpec::new(
                        "fixed-delta",
                        Real,
                        "0.005",
                        "noise level of the fixed-alpha panel",
                    ),
                    ParamSpec::new(
                        "alphas",
                        RealList,
                        "0.001,1e-5,1e-7,1e-9",
                        "alphas of the fixed-alpha panel",
                    ),
                ];
                T
            }
            ExperimentId::AscCurves => {
                const T: &[ParamSpec] = &[
                    ParamSpec::new("n", Int, "5000", "model size"),
                    ParamSpec::new("eta", Real, "2", "singular value decay"),
                    ParamSpec::new("beta", Real, "2", "coefficient decay"),
                    ParamSpec::new(
                        "leading-ones",
                        Int,
                        "8",
                        "leading unit coefficients of the variant",
                    ),
                    ParamSpec::new("points", Int, "40", "radius grid size"),
                    ParamSpec::new("r-min", Real, "2", "smallest radius"),
                    ParamSpec::new("r-max", Real, "40", "largest radius"),
                    ParamSpec::new(
                        "trim",
                        Real,
                        "0.2",
                        "fraction cut from each end before fitting",
                    ),
                ];
                T
            }
            ExperimentId::DiscreteAsc => {
                const T: &[ParamSpec] = &[
                    ParamSpec::new("sizes", IntList, "20,80,320,1280", "discretization levels"),
                    ParamSpec::new("eta", Real, "2", "singular value decay"),
                    ParamSpec::new("beta", Real, "2", "coefficient decay"),
                    ParamSpec::new("points", Int, "129", "multiplier grid size"),
                    ParamSpec::new("lambda-max", Real, "100", "largest multiplier"),
                    ParamSpec::new("lambda-min", Real, "1e-28", "smallest multiplier"),
                ];
                T
            }
            ExperimentId::SourceGrowth => {
                const T: &[ParamSpec] = &[
                    ParamSpec::new("n", Int, "5000", "model size"),
                    ParamSpec::new("eta", Real, "2", "singular value decay"),
                    ParamSpec::new("beta", Real, "2", "coefficient decay"),
                    ParamSpec::new("alpha-min", Real, "1e-24", "smallest alpha"),
                    ParamSpec::new("alpha-max", Real, "1", "largest alpha"),
                    ParamSpec::new("alpha-count", Int, "121", "alpha grid size"),
                ];
                T
            }
            ExperimentId::RateTable => {
                const T: &[ParamSpec] = &[
                    ParamSpec::new("n", Int, "5000", "model size"),
                    ParamSpec::new("eta", Real, "2", "singular value decay"),
                    ParamSpec::new("mu", Real, "0.375", "smoothness index"),
                    ParamSpec::new("deltas", RealList, DELTA_SWEEP, "relative noise levels"),
                    ParamSpec::new("seeds", Int, "5", "noise replicates per level"),
                    ParamSpec::new("tau", Real, "1.5", "discrepancy factor"),
                    ParamSpec::new("c", Real, "1", "a-priori constant"),
                    ParamSpec::new("alpha-min", Real, "1e-30", "discrepancy search lower end"),
                    ParamSpec::new("alpha-max", Real, "100", "discrepancy search upper end"),
                ];
                T
            }
            ExperimentId::HighOrderSaturation => {
                const T: &[ParamSpec] = &[
                ParamSpec::new("n", Int, "5000", "model size"),
                ParamSpec::new("eta", Real, "2", "singular value decay"),
                ParamSpec::new("mus", RealList, "0.25,1.25,2.25,3.25", "smoothness indices"),
                ParamSpec::new("kappa-order", Int, "1", "Tikhonov order"),
                ParamSpec::new(
                    "deltas",
                    RealList,
                    "1e-8,3.1622776601683795e-9,1e-9,3.1622776601683794e-10,1e-10,3.1622776601683795e-11,1e-11",
                    "relative noise levels",
                ),
                ParamSpec::new("seeds", Int, "5", "noise replicates per level"),
                ParamSpec::new("tau", Real, "1.5", "discrepancy factor"),
                ParamSpec::new("alpha-min", Real, "1e-40", "discrepancy search lower end"),
                ParamSpec::new("alpha-max", Real, "100", "discrepancy search upper end"),
                ];
                T
            }
            ExperimentId::OversmoothingRate => {
                const T: &[ParamSpec] = &[
                    ParamSpec::new("n", Int, "5000", "model size"),
                    ParamSpec::new("a", Real, "1", "operator smoothing order"),
                    ParamSpec::new("p", Real, "1", "solution smoothness"),
                    ParamSpec::new("s", Real, "2", "penalty index"),
                    ParamSpec::new("deltas", RealList, DELTA_SWEEP, "relative noise levels"),
                    ParamSpec::new("seeds", Int, "5", "noise replicates per level"),
                    ParamSpec::new("c", Real, "1", "a-priori constant"),
                ];
                T
            }
            ExperimentId::LandweberVsTikhonov => {
                const T: &[ParamSpec] = &[
                    ParamSpec::new("n", Int, "5000", "model size"),
                    ParamSpec::new("eta", Real, "2", "singular value decay"),
                    ParamSpec::new("beta", Real, "2", "coefficient decay"),
                    ParamSpec::new("deltas", RealList, "0,0.001", "relative noise levels"),
                    ParamSpec::new("alpha-base", Real, "0.7", "Tikhonov uses alpha = base^j"),
                    ParamSpec::new("alpha-count", Int, "60", "number of Tikhonov alphas"),
                    ParamSpec::new("k-max", Int, "50000", "Landweber iterations"),
                    ParamSpec::new("step", Real, "1", "Landweber step size"),
                    ParamSpec::new(
                        "per-octave",
                        Int,
                        "24",
                        "Landweber checkpoints per doubling of k",
                    ),
                ];
                T
            }
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentId::ALL
            .iter()
            .copied()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| {
                let known: Vec<&str> = ExperimentId::ALL.iter().map(|i| i.as_str()).collect();
                Error::Configuration(format!(
                    "unknown experiment '{s}' (known: {})",
                    known.join(", ")
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kind {
    Int,
    Real,
    RealList,
    IntList,
    Bool,
    Choice(&'static [&'static str]),
}

#[derive(Debug, Clone, Copy)]
pub struct ParamSpec {
    pub name: &'static str,
    pub kind: Kind,
    pub default: &'static str,
    pub help: &'static str,
}

impl ParamSpec {
    const fn new(
        name: &'static str,
        kind: Kind,
        default: &'static str,
        help: &'static str,
    ) -> Self {
        ParamSpec {
            name,
            kind,
            default,
            help,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    Int(u64),
    Real(f64),
    RealList(Vec<f64>),
    IntList(Vec<u64>),
    Bool(bool),
    Text(String),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn join<T: fmt::Display>(v: &[T]) -> String {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        }
        match self {
            ParamValue::Int(v) => write!(f, "{v}"),
            ParamValue::Real(v) => write!(f, "{v:?}"),
            ParamValue::RealList(v) => f.write_str(
                &v.iter()
                    .map(|x| format!("{x:?}"))
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            ParamValue::IntList(v) => f.write_str(&join(v)),
            ParamValue::Bool(v) => write!(f, "{v}"),
            ParamValue::Text(v) => f.write_str(v),
        }
    }
}

fn parse_value(spec: &ParamSpec, raw: &str) -> Result<ParamValue> {
    let bad =
        |what: &str| Error::Configuration(format!("--{} expects {what}, got '{raw}'", spec.name));
    let real = |s: &str| -> Result<f64> {
        let v: f64 = s.trim().parse().map_err(|_| bad("a number"))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(bad("a finite number"))
        }
    };
    let int =
        |s: &str| -> Result<u64> { s.trim().parse().map_err(|_| bad("a nonnegative integer")) };
    Ok(match spec.kind {
        Kind::Int => ParamValue::Int(int(raw)?),
        Kind::Real => ParamValue::Real(real(raw)?),
        Kind::RealList => ParamValue::RealList(
            raw.split(',')
                .filter(|s| !s.trim().is_empty())
                .map(real)
                .collect::<Result<_>>()?,
        ),
        Kind::IntList => ParamValue::IntList(
            raw.split(',')
                .filter(|s| !s.trim().is_empty())
                .map(int)
                .collect::<Result<_>>()?,
        ),
        Kind::Bool => ParamValue::Bool(raw.trim().parse().map_err(|_| bad("true or false"))?),
        Kind::Choice(options) => {
            if options.contains(&raw.trim()) {
                ParamValue::Text(raw.trim().to_string())
            } else {
                return Err(bad(&format!("one of {}", options.join("|"))));
            }
        }
    })
}

/// Fully resolved parameters of one experiment run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub id: ExperimentId,
    pub seed: u64,
    params: BTreeMap<String, ParamValue>,
}

impl ExperimentConfig {
    pub fn defaults(id: ExperimentId) -> Self {
        ExperimentConfig::new(id, DEFAULT_SEED, &[]).expect("built-in defaults are valid")
    }

    /// Applies `(flag, value)` overrides on top of the defaults. Flags are
    /// written without leading dashes; `seed` is accepted as a flag too.
    pub fn new(id: ExperimentId, seed: u64, overrides: &[(String, String)]) -> Result<Self> {
        let specs = id.params();
        let mut params = BTreeMap::new();
        for spec in specs {
            params.insert(spec.name.to_string(), parse_value(spec, spec.default)?);
        }
        let mut seed = seed;
        for (flag, raw) in overrides {
            let flag = flag.trim_start_matches('-');
            if flag == "seed" {
                seed = raw.trim().parse().map_err(|_| {
                    Error::Configuration(format!("--seed expects an integer, got '{raw}'"))
                })?;
                continue;
            }
            let spec = specs.iter().find(|s| s.name == flag).ok_or_else(|| {
                let known: Vec<&str> = specs.iter().map(|s| s.name).collect();
                Error::Configuration(format!(
                    "flag --{flag} does not apply to {id} (accepted: {})",
                    known.join(", ")
                ))
            })?;
            params.insert(flag.to_string(), parse_value(spec, raw)?);
        }
        let config = ExperimentConfig { id, seed, params };
        config.validate()?;
        Ok(config)
    }

    /// Every parameter (including the seed) as flag/value strings that
    /// [`ExperimentConfig::new`] accepts back.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let mut out: BTreeMap<String, String> = self
            .params
            .iter()
            .map(|(k, v)| (k.clone(), v.to_string()))
            .collect();
        out.insert("seed".into(), self.seed.to_string());
        out
    }

    pub fn from_echo(id: ExperimentId, echo: &BTreeMap<String, String>) -> Result<Self> {
        let pairs: Vec<(String, String)> =
            echo.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        ExperimentConfig::new(id, DEFAULT_SEED, &pairs)
    }

    fn get(&self, name: &str) -> &ParamValue {
        self.params
            .get(name)
            .unwrap_or_else(|| panic!("{} has no parameter '{name}'", self.id))
    }

    pub fn int(&self, name: &str) -> usize {
        match self.get(name) {
            ParamValue::Int(v) => *v as usize,
            other => panic!("parameter '{name}' is not an integer: {other:?}"),
        }
    }

    pub fn real(&self, name: &str) -> f64 {
        match self.get(name) {
            ParamValue::Real(v) => *v,
            other => panic!("parameter '{name}' is not a number: {other:?}"),
        }
    }

    pub fn reals(&self, name: &str) -> &[f64] {
        match self.get(name) {
            ParamValue::RealList(v) => v,
            other => panic!("parameter '{name}' is not a number list: {other:?}"),
        }
    }

    pub fn ints(&self, name: &str) -> Vec<usize> {
        match self.get(name) {
            ParamValue::IntList(v) => v.iter().map(|x| *x as usize).collect(),
            other => panic!("parameter '{name}' is not an integer list: {other:?}"),
        }
    }

    pub fn flag(&self, name: &str) -> bool {
        match self.get(name) {
            ParamValue::Bool(v) => *v,
            other => panic!("parameter '{name}' is not a flag: {other:?}"),
        }
    }

    pub fn text(&self, name: &str) -> &str {
        match self.get(name) {
            ParamValue::Text(v) => v,
            other => panic!("parameter '{name}' is not a choice: {other:?}"),
        }
    }

    fn has(&self, name: &str) -> bool {
        self.params.contains_key(name)
    }

    fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Configuration(msg));
        for (name, value) in &self.params {
            match value {
                ParamValue::RealList(v) if v.is_empty() => {
                    return fail(format!("--{name} is empty"))
                }
                ParamValue::IntList(v) if v.is_empty() => {
                    return fail(format!("--{name} is empty"))
                }
                _ => {}
            }
        }
        for name in ["n", "points", "alpha-count", "seeds", "k-max", "per-octave"] {
            if self.has(name) && self.int(name) == 0 {
                return fail(format!("--{name} must be positive"));
            }
        }
        let min_n = if self.id == ExperimentId::BoundaryEffect {
            4
        } else {
            1
        };
        if self.has("n") && self.int("n") < min_n {
            return fail(format!("--n must be at least {min_n}"));
        }
        for name in [
            "eta",
            "beta",
            "mu",
            "tau",
            "c",
            "a",
            "p",
            "step",
            "r-min",
            "r-max",
            "alpha-min",
            "alpha-max",
            "lambda-min",
            "lambda-max",
            "alpha-base",
            "fixed-delta",
        ] {
            if self.has(name) && self.real(name) <= 0.0 {
                return fail(format!("--{name} must be positive"));
            }
        }
        if self.has("s") && self.real("s") < 0.0 {
            return fail("--s must be nonnegative".into());
        }
        if self.has("beta") && 2.0 * self.real("beta") <= 1.0 {
            return fail("--beta must exceed 1/2 for a square-summable solution".into());
        }
        if self.has("trim") && !(0.0..0.5).contains(&self.real("trim")) {
            return fail("--trim must lie in [0, 0.5)".into());
        }
        if self.has("tau") && self.real("tau") < 1.0 {
            return fail("--tau must be at least 1".into());
        }
        if self.has("alpha-base") && self.real("alpha-base") >= 1.0 {
            return fail("--alpha-base must lie in (0, 1)".into());
        }
        for (lo, hi) in [
            ("alpha-min", "alpha-max"),
            ("r-min", "r-max"),
            ("lambda-min", "lambda-max"),
        ] {
            if self.has(lo) && self.real(lo) >= self.real(hi) {
                return fail(format!("--{lo} must be below --{hi}"));
            }
        }
        if self.has("deltas") {
            let deltas = self.reals("deltas");
            if deltas.iter().any(|d| *d < 0.0) {
                return fail("--deltas must be nonnegative".into());
            }
            let needs_noise = matches!(
                self.id,
                ExperimentId::RateTable
                    | ExperimentId::HighOrderSaturation
                    | ExperimentId::OversmoothingRate
            );
            if needs_noise && deltas.contains(&0.0) {
                return fail(format!("{} needs positive noise levels", self.id));
            }
            if needs_noise && deltas.len() < 2 {
                return fail(format!(
                    "{} needs at least two noise levels to fit a rate",
                    self.id
                ));
            }
        }
        if self.has("mus") && self.reals("mus").iter().any(|m| *m <= 0.0) {
            return fail("--mus must be positive".into());
        }
        if self.has("alphas") && self.reals("alphas").iter().any(|a| *a <= 0.0) {
            return fail("--alphas must be positive".into());
        }
        if self.has("sizes") && self.ints("sizes").contains(&0) {
            return fail("--sizes must be positive".into());
        }
        if self.has("step") && self.real("step") >= 2.0 {
            return fail("--step must lie in (0, 2) for a norm-one operator".into());
        }
        Ok(())
    }
}
