//! Laws of the random scales `lambda_j`, selectable by name.
//!
//! Every law is described by its quantile function, so a single uniform
//! variate per site suffices for sampling and `E[lambda^d]` can always be
//! computed by quadrature when no closed form is known.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use super::PotentialError;

pub trait ScaleLaw: Send + Sync + fmt::Debug {
    /// Registry key, e.g. `"uniform01"`.
    fn name(&self) -> &'static str;

    /// Canonical spec string accepted by [`DistributionRegistry::parse`].
    fn spec(&self) -> String;

    /// Inverse CDF on `[0, 1)`; values lie in `[0, 1]`.
    fn quantile(&self, u: f64) -> f64;

    /// `E[lambda^d]` in closed form, when available.
    fn power_moment(&self, _d: usize) -> Option<f64> {
        None
    }

    /// `P(lambda = 0) < 1` and `P(lambda <= eps) > 0` for every `eps > 0`.
    fn satisfies_model_assumptions(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Uniform01;

impl ScaleLaw for Uniform01 {
    fn name(&self) -> &'static str {
        "uniform01"
    }

    fn spec(&self) -> String {
        "uniform01".into()
    }

    fn quantile(&self, u: f64) -> f64 {
        u
    }

    fn power_moment(&self, d: usize) -> Option<f64> {
        Some(1.0 / (d as f64 + 1.0))
    }
}

/// `lambda = B * U` with `B ~ Bernoulli(p)` and `U ~ Uniform[0, 1]` independent.
#[derive(Debug, Clone, Copy)]
pub struct BernoulliUniform {
    p: f64,
}

impl BernoulliUniform {
    pub fn new(p: f64) -> Result<Self, PotentialError> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(PotentialError::Distribution(format!(
                "bernoulli_uniform requires p in (0, 1], got {p}"
            )));
        }
        Ok(Self { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

impl ScaleLaw for BernoulliUniform {
    fn name(&self) -> &'static str {
        "bernoulli_uniform"
    }

    fn spec(&self) -> String {
        format!("bernoulli_uniform({})", self.p)
    }

    fn quantile(&self, u: f64) -> f64 {
        let zero_mass = 1.0 - self.p;
        if u < zero_mass {
            0.0
        } else {
            ((u - zero_mass) / self.p).min(1.0)
        }
    }

    fn power_moment(&self, d: usize) -> Option<f64> {
        Some(self.p / (d as f64 + 1.0))
    }
}

/// Deterministic scale; violates the non-degeneracy assumption and is meant
/// for tests only.
#[derive(Debug, Clone, Copy)]
pub struct PointMass {
    t: f64,
}

impl PointMass {
    pub fn new(t: f64) -> Result<Self, PotentialError> {
        if !(0.0..=1.0).contains(&t) {
            return Err(PotentialError::Distribution(format!("point_mass requires t in [0, 1], got {t}")));
        }
        Ok(Self { t })
    }
}

impl ScaleLaw for PointMass {
    fn name(&self) -> &'static str {
        "point_mass"
    }

    fn spec(&self) -> String {
        format!("point_mass({})", self.t)
    }

    fn quantile(&self, _u: f64) -> f64 {
        self.t
    }

    fn power_moment(&self, d: usize) -> Option<f64> {
        Some(self.t.powi(d as i32))
    }

    fn satisfies_model_assumptions(&self) -> bool {
        false
    }
}

/// Shared handle to a scale law.
#[derive(Clone)]
pub struct ScaleDistribution(Arc<dyn ScaleLaw>);

impl ScaleDistribution {
    pub fn new(law: impl ScaleLaw + 'static) -> Self {
        Self(Arc::new(law))
    }

    pub fn uniform01() -> Self {
        Self::new(Uniform01)
    }

    pub fn bernoulli_uniform(p: f64) -> Result<Self, PotentialError> {
        Ok(Self::new(BernoulliUniform::new(p)?))
    }

    pub fn point_mass(t: f64) -> Result<Self, PotentialError> {
        Ok(Self::new(PointMass::new(t)?))
    }

    pub fn law(&self) -> &dyn ScaleLaw {
        self.0.as_ref()
    }

    pub fn spec(&self) -> String {
        self.0.spec()
    }

    pub fn quantile(&self, u: f64) -> f64 {
        self.0.quantile(u)
    }

    pub fn is_degenerate(&self) -> bool {
        !self.0.satisfies_model_assumptions()
    }
}

impl fmt::Debug for ScaleDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScaleDistribution({})", self.spec())
    }
}

type Factory = fn(&[f64]) -> Result<ScaleDistribution, PotentialError>;

struct Entry {
    arity: usize,
    factory: Factory,
}

/// Name -> constructor table for scale laws.
///
/// Specs look like `uniform01`, `bernoulli_uniform(0.5)` or `point_mass(0)`.
pub struct DistributionRegistry {
    entries: BTreeMap<&'static str, Entry>,
}

impl DistributionRegistry {
    pub fn empty() -> Self {
        Self { entries: BTreeMap::new() }
    }

    pub fn builtin() -> Self {
        let mut reg = Self::empty();
        reg.register("uniform01", 0, |_| Ok(ScaleDistribution::uniform01()));
        reg.register("bernoulli_uniform", 1, |p| ScaleDistribution::bernoulli_uniform(p[0]));
        reg.register("point_mass", 1, |p| ScaleDistribution::point_mass(p[0]));
        reg
    }

    pub fn register(&mut self, name: &'static str, arity: usize, factory: Factory) {
        self.entries.insert(name, Entry { arity, factory });
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }

    pub fn parse(&self, spec: &str) -> Result<ScaleDistribution, PotentialError> {
        let spec = spec.trim();
        let (name, args) = match spec.find('(') {
            Some(open) => {
                let close = spec
                    .strip_suffix(')')
                    .ok_or_else(|| PotentialError::Distribution(format!("unbalanced parentheses in {spec:?}")))?;
                (spec[..open].trim(), &close[open + 1..])
            }
            None => (spec, ""),
        };
        let entry = self.entries.get(name).ok_or_else(|| {
            let known: Vec<_> = self.names().collect();
            PotentialError::Distribution(format!("unknown distribution {name:?} (known: {})", known.join(", ")))
        })?;
        let params = args
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| PotentialError::Distribution(format!("invalid parameter {s:?} in {spec:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if params.len() != entry.arity {
            return Err(PotentialError::Distribution(format!(
                "{name} takes {} parameter(s), got {}",
                entry.arity,
                params.len()
            )));
        }
        (entry.factory)(&params)
    }
}

impl Default for DistributionRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}
