//! Named cycle-type samplers.
//!
//! Each permutation measure is a [`CycleSampler`] registered under a name in a
//! [`SamplerRegistry`]; ensembles and the CLI pick one at runtime from a
//! [`MeasureSpec`] such as `uniform` or `ewens:0.5`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cycletype::{sample_ewens_cycle_type, sample_uniform_cycle_type, CycleType};
use crate::error::{Error, Result};
use crate::rng::RngStream;

pub trait CycleSampler: Send + Sync {
    fn name(&self) -> &'static str;

    fn sample(&self, n: usize, rng: &mut RngStream) -> Result<CycleType>;

    /// Whether this sampler draws from the uniform (Haar) measure. Only those
    /// ensembles are compared against the limit-law oracles.
    fn is_uniform(&self) -> bool {
        false
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct UniformSampler;

impl CycleSampler for UniformSampler {
    fn name(&self) -> &'static str {
        "uniform"
    }

    fn sample(&self, n: usize, rng: &mut RngStream) -> Result<CycleType> {
        sample_uniform_cycle_type(n, rng)
    }

    fn is_uniform(&self) -> bool {
        true
    }
}

#[derive(Clone, Copy, Debug)]
pub struct EwensSampler {
    param: f64,
}

impl EwensSampler {
    pub fn new(param: f64) -> Result<Self> {
        if !(param > 0.0 && param.is_finite()) {
            return Err(Error::invalid("ewens", "must be a positive finite number"));
        }
        Ok(EwensSampler { param })
    }
}

impl CycleSampler for EwensSampler {
    fn name(&self) -> &'static str {
        "ewens"
    }

    fn sample(&self, n: usize, rng: &mut RngStream) -> Result<CycleType> {
        sample_ewens_cycle_type(n, self.param, rng)
    }
}

/// A measure name plus its optional parameter, written `name` or `name:param`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureSpec {
    pub name: String,
    pub param: Option<f64>,
}

impl MeasureSpec {
    pub fn uniform() -> Self {
        MeasureSpec {
            name: "uniform".into(),
            param: None,
        }
    }

    pub fn ewens(param: f64) -> Self {
        MeasureSpec {
            name: "ewens".into(),
            param: Some(param),
        }
    }
}

impl Default for MeasureSpec {
    fn default() -> Self {
        MeasureSpec::uniform()
    }
}

impl fmt::Display for MeasureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.param {
            Some(p) => write!(f, "{}:{}", self.name, p),
            None => write!(f, "{}", self.name),
        }
    }
}

impl FromStr for MeasureSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, param) = match s.split_once(':') {
            Some((name, p)) => {
                let p: f64 = p
                    .parse()
                    .map_err(|_| Error::invalid("measure", format!("bad parameter in `{s}`")))?;
                (name, Some(p))
            }
            None => (s, None),
        };
        if name.is_empty() {
            return Err(Error::invalid("measure", "empty measure name"));
        }
        Ok(MeasureSpec {
            name: name.to_string(),
            param,
        })
    }
}

pub type SamplerFactory = fn(Option<f64>) -> Result<Box<dyn CycleSampler>>;

pub struct SamplerRegistry {
    factories: BTreeMap<String, SamplerFactory>,
}

impl SamplerRegistry {
    pub fn empty() -> Self {
        SamplerRegistry {
            factories: BTreeMap::new(),
        }
    }

    /// Registry holding `uniform` and `ewens`.
    pub fn with_builtins() -> Self {
        let mut reg = SamplerRegistry::empty();
        reg.register("uniform", |param| match param {
            None => Ok(Box::new(UniformSampler)),
            Some(_) => Err(Error::invalid("measure", "uniform takes no parameter")),
        });
        reg.register("ewens", |param| {
            let p = param.ok_or_else(|| Error::invalid("measure", "ewens needs a parameter, e.g. ewens:0.5"))?;
            Ok(Box::new(EwensSampler::new(p)?))
        });
        reg
    }

    /// Registers (or replaces) a factory under `name`.
    pub fn register(&mut self, name: &str, factory: SamplerFactory) {
        self.factories.insert(name.to_string(), factory);
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    pub fn build(&self, spec: &MeasureSpec) -> Result<Box<dyn CycleSampler>> {
        let factory = self
            .factories
            .get(&spec.name)
            .ok_or_else(|| Error::UnknownMeasure(spec.name.clone()))?;
        factory(spec.param)
    }
}

impl Default for SamplerRegistry {
    fn default() -> Self {
        SamplerRegistry::with_builtins()
    }
}
