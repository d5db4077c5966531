use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::clifford::Signature;
use crate::error::{Error, Result};
use crate::linalg::RMat;

pub type MetricFn = Arc<dyn Fn(&[f64]) -> RMat + Send + Sync>;
pub type CovectorFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
/// Symmetric (0,2)-tensor in coordinate components.
pub type TensorFn = Arc<dyn Fn(&[f64]) -> RMat + Send + Sync>;

#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub periodic: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    pub axes: Vec<Axis>,
}

impl Domain {
    pub fn periodic_box(lengths: &[f64]) -> Self {
        Domain { axes: lengths.iter().map(|&l| Axis { lo: 0.0, hi: l, periodic: true }).collect() }
    }

    pub fn open_box(lo: &[f64], hi: &[f64]) -> Self {
        Domain { axes: lo.iter().zip(hi).map(|(&a, &b)| Axis { lo: a, hi: b, periodic: false }).collect() }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    /// Fails when a stencil of half-width `reach` would leave a non-periodic axis.
    pub fn require_interior(&self, x: &[f64], reach: f64) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        for (axis, (a, &xi)) in self.axes.iter().zip(x).enumerate() {
            if !a.periodic && (xi - reach < a.lo || xi + reach > a.hi) {
                return Err(Error::NearBoundary { axis, point: x.to_vec() });
            }
        }
        Ok(())
    }

    /// Seeded uniform samples, keeping `margin` away from non-periodic ends.
    pub fn sample(&self, seed: u64, count: usize, margin: f64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                self.axes
                    .iter()
                    .map(|a| {
                        let (lo, hi) = if a.periodic { (a.lo, a.hi) } else { (a.lo + margin, a.hi - margin) };
                        lo + (hi - lo) * rng.random::<f64>()
                    })
                    .collect()
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Backends {
    pub pointwise: bool,
    pub lattice: bool,
}

/// A chart of a Spin^c manifold: metric, auxiliary U(1) connection and domain.
///
/// `connection` is the coordinate one-form `a` of the auxiliary bundle; spinors
/// see `½ i a`. `flux` adds a quantized uniform field on the first two axes of a
/// periodic lattice and has no pointwise representation.
#[derive(Clone)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub signature: Signature,
    pub domain: Domain,
    pub metric: MetricFn,
    pub connection: Option<CovectorFn>,
    pub flux: i64,
    pub backends: Backends,
    pub sample_margin: f64,
    pub reference: BTreeMap<String, f64>,
}

impl fmt::Debug for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Scenario")
            .field("name", &self.name)
            .field("signature", &self.signature)
            .field("domain", &self.domain)
            .field("flux", &self.flux)
            .finish()
    }
}

impl Scenario {
    pub fn new(name: &str, signature: Signature, domain: Domain, metric: MetricFn) -> Self {
        Scenario {
            name: name.to_string(),
            description: String::new(),
            signature,
            domain,
            metric,
            connection: None,
            flux: 0,
            backends: Backends { pointwise: true, lattice: false },
            sample_margin: 0.1,
            reference: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.signature.n()
    }

    pub fn metric_at(&self, x: &[f64]) -> Result<RMat> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok((self.metric)(x))
    }

    pub fn connection_at(&self, x: &[f64]) -> Vec<f64> {
        match &self.connection {
            Some(a) => a(x),
            None => vec![0.0; self.dim()],
        }
    }

    pub fn require_pointwise(&self) -> Result<()> {
        if self.backends.pointwise {
            Ok(())
        } else {
            Err(Error::Unsupported(format!("`{}` has no pointwise chart (lattice only)", self.name)))
        }
    }

    pub fn require_lattice(&self) -> Result<()> {
        if self.backends.lattice {
            Ok(())
        } else {
            Err(Error::Unsupported(format!("`{}` is not a periodic lattice scenario", self.name)))
        }
    }

    /// Same chart with the metric `g + t k`.
    pub fn perturbed(&self, k: &TensorFn, t: f64) -> Scenario {
        let g = self.metric.clone();
        let k = k.clone();
        let mut out = self.clone();
        out.metric = Arc::new(move |x: &[f64]| g(x) + k(x) * t);
        out
    }

    pub fn with_connection(mut self, a: CovectorFn) -> Self {
        self.connection = Some(a);
        self
    }

    pub fn with_description(mut self, d: &str) -> Self {
        self.description = d.to_string();
        self
    }

    pub fn sample(&self, seed: u64, count: usize) -> Vec<Vec<f64>> {
        self.domain.sample(seed, count, self.sample_margin)
    }
}
