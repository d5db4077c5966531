//! Named chart scenarios.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::clifford::Signature;
use crate::error::{Error, Result};
use crate::geometry::{Axis, Backends, Domain, Scenario};
use crate::linalg::RMat;

/// Optional knobs shared by catalog entries; unused fields are ignored by
/// scenarios that have no such parameter.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioParams {
    pub radius: Option<f64>,
    /// Must be an integer; fractional values are rejected.
    pub flux: Option<f64>,
    pub amplitude: Option<f64>,
    /// Constant metric override for flat tori, row-major.
    pub metric: Option<Vec<Vec<f64>>>,
    pub field_strength: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScenarioInfo {
    pub name: String,
    pub kind: String,
    pub dim: usize,
    pub signature: [usize; 2],
    pub pointwise: bool,
    pub lattice: bool,
    pub description: String,
    /// Keys of the closed-form reference data.
    pub reference: Vec<String>,
}

pub const CHART_NAMES: &[&str] = &[
    "torus1-flat",
    "torus2-flat",
    "torus3-flat",
    "torus2-perturbed",
    "torus3-perturbed",
    "torus-magnetic",
    "plane2-magnetic",
    "sphere2-unit",
    "sphere2-swapped",
    "sphere2-stereo-north",
    "sphere2-stereo-south",
    "r2-euclidean",
    "r3-euclidean",
    "lorentz2-flat",
    "lorentz2-tilted",
    "lorentz2-warped",
    "lorentz3-flat",
];

fn constant_metric(m: RMat) -> crate::geometry::MetricFn {
    Arc::new(move |_x: &[f64]| m.clone())
}

fn flat_torus(n: usize, name: &str, params: &ScenarioParams) -> Result<Scenario> {
    let g = match &params.metric {
        Some(rows) => {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(Error::Config(format!("metric override must be {n}x{n}")));
            }
            RMat::from_fn(n, n, |i, j| rows[i][j])
        }
        None => RMat::identity(n, n),
    };
    let mut sc = Scenario::new(name, Signature::riemannian(n)?, Domain::periodic_box(&vec![2.0 * PI; n]), constant_metric(g))
        .with_description(&format!("flat {n}-torus of side 2π"));
    sc.backends = Backends { pointwise: true, lattice: true };
    Ok(sc)
}

fn sphere(name: &str, swapped: bool, radius: f64) -> Result<Scenario> {
    let r2 = radius * radius;
    let (theta_axis, metric): (usize, crate::geometry::MetricFn) = if swapped {
        (1, Arc::new(move |x: &[f64]| RMat::from_row_slice(2, 2, &[r2 * x[1].sin().powi(2), 0.0, 0.0, r2])))
    } else {
        (0, Arc::new(move |x: &[f64]| RMat::from_row_slice(2, 2, &[r2, 0.0, 0.0, r2 * x[0].sin().powi(2)])))
    };
    let theta = Axis { lo: 0.0, hi: PI, periodic: false };
    let phi = Axis { lo: 0.0, hi: 2.0 * PI, periodic: true };
    let axes = if theta_axis == 0 { vec![theta, phi] } else { vec![phi, theta] };
    let mut sc = Scenario::new(name, Signature::riemannian(2)?, Domain { axes }, metric).with_description(if swapped {
        "round sphere, chart (φ, θ)"
    } else {
        "round sphere, chart (θ, φ)"
    });
    sc.reference.insert("first_dirac_eigenvalue".into(), 1.0 / radius);
    sc.reference.insert("scalar_curvature".into(), 2.0 / r2);
    Ok(sc)
}

pub fn chart_scenario(name: &str, params: &ScenarioParams) -> Result<Scenario> {
    let amp = params.amplitude.unwrap_or(0.2);
    let radius = params.radius.unwrap_or(1.0);
    if radius <= 0.0 {
        return Err(Error::Config("radius must be positive".into()));
    }
    let sc = match name {
        "torus1-flat" => flat_torus(1, name, params)?,
        "torus2-flat" => flat_torus(2, name, params)?,
        "torus3-flat" => flat_torus(3, name, params)?,
        "torus2-perturbed" => {
            let mut sc = flat_torus(2, name, &ScenarioParams::default())?;
            sc.metric = Arc::new(move |x: &[f64]| {
                let k = RMat::from_row_slice(
                    2,
                    2,
                    &[x[1].sin(), 0.5 * x[0].cos(), 0.5 * x[0].cos(), 0.5 * (x[0] + x[1]).sin()],
                );
                RMat::identity(2, 2) + k * amp
            });
            sc.connection = Some(Arc::new(|x: &[f64]| vec![0.3 * x[1].sin(), 0.2 * x[0].cos() + 0.1 * x[1].cos()]));
            sc.with_description("Fourier-perturbed 2-torus with a smooth auxiliary connection")
        }
        "torus3-perturbed" => {
            let mut sc = flat_torus(3, name, &ScenarioParams::default())?;
            sc.metric = Arc::new(move |x: &[f64]| {
                let k = RMat::from_row_slice(
                    3,
                    3,
                    &[
                        x[1].sin(),
                        0.3 * x[2].cos(),
                        0.0,
                        0.3 * x[2].cos(),
                        0.5 * (x[0] + x[2]).sin(),
                        0.2 * x[0].sin(),
                        0.0,
                        0.2 * x[0].sin(),
                        0.5 * x[1].cos(),
                    ],
                );
                RMat::identity(3, 3) + k * amp
            });
            sc.connection = Some(Arc::new(|x: &[f64]| vec![0.2 * x[2].sin(), 0.1 * x[0].cos(), 0.3 * x[1].sin()]));
            sc.with_description("Fourier-perturbed 3-torus with a smooth auxiliary connection")
        }
        "torus-magnetic" => {
            let mut sc = flat_torus(2, name, params)?;
            sc.flux = params.flux.map(crate::lattice::quantized_flux).transpose()?.unwrap_or(3);
            sc.backends = Backends { pointwise: false, lattice: true };
            sc.with_description("flat 2-torus with quantized uniform flux (lattice only)")
        }
        "plane2-magnetic" => {
            let b = params.field_strength.unwrap_or(1.0);
            let sc = Scenario::new(
                name,
                Signature::riemannian(2)?,
                Domain::open_box(&[-2.0, -2.0], &[2.0, 2.0]),
                constant_metric(RMat::identity(2, 2)),
            );
            sc.with_connection(Arc::new(move |x: &[f64]| vec![0.0, b * x[0]]))
                .with_description("flat square with constant curvature form Ω₁₂ = B")
        }
        "sphere2-unit" => sphere(name, false, radius)?,
        "sphere2-swapped" => sphere(name, true, radius)?,
        "sphere2-stereo-north" | "sphere2-stereo-south" => {
            let r2 = radius * radius;
            let metric: crate::geometry::MetricFn = Arc::new(move |x: &[f64]| {
                let q = 1.0 + x[0] * x[0] + x[1] * x[1];
                RMat::identity(2, 2) * (4.0 * r2 / (q * q))
            });
            let mut sc = Scenario::new(name, Signature::riemannian(2)?, Domain::open_box(&[-3.0, -3.0], &[3.0, 3.0]), metric)
                .with_description("round sphere, stereographic chart");
            sc.reference.insert("first_dirac_eigenvalue".into(), 1.0 / radius);
            sc.reference.insert("scalar_curvature".into(), 2.0 / r2);
            sc
        }
        "r2-euclidean" | "r3-euclidean" => {
            let n = if name == "r2-euclidean" { 2 } else { 3 };
            let mut sc = Scenario::new(
                name,
                Signature::riemannian(n)?,
                Domain::open_box(&vec![-3.0; n], &vec![3.0; n]),
                constant_metric(RMat::identity(n, n)),
            )
            .with_description("Euclidean space, Cartesian chart");
            if let Some(b) = params.field_strength {
                sc.connection = Some(Arc::new(move |x: &[f64]| {
                    let mut a = vec![0.0; x.len()];
                    a[1] = b * x[0];
                    a
                }));
            }
            sc
        }
        "lorentz2-flat" => {
            let b = params.field_strength.unwrap_or(0.5);
            Scenario::new(
                name,
                Signature::new(1, 1)?,
                Domain::open_box(&[-3.0, -3.0], &[3.0, 3.0]),
                constant_metric(RMat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])),
            )
            .with_connection(Arc::new(move |x: &[f64]| vec![0.0, b * x[0]]))
            .with_description("flat signature (1,1) with a constant curvature form")
        }
        "lorentz2-tilted" => Scenario::new(
            name,
            Signature::new(1, 1)?,
            Domain::open_box(&[-3.0, -3.0], &[3.0, 3.0]),
            constant_metric(RMat::from_row_slice(2, 2, &[-1.0, 0.3, 0.3, 1.0])),
        )
        .with_description("flat signature (1,1), timelike first coordinate"),
        "lorentz2-warped" => Scenario::new(
            name,
            Signature::new(1, 1)?,
            Domain::open_box(&[-2.0, -2.0], &[2.0, 2.0]),
            Arc::new(|x: &[f64]| RMat::from_row_slice(2, 2, &[x[1].cosh().powi(2), 0.0, 0.0, -1.0])),
        )
        .with_connection(Arc::new(|x: &[f64]| vec![0.2 * x[1], 0.1 * x[0] * x[0]]))
        .with_description("curved signature (1,1): g = cosh²τ dx² - dτ²"),
        "lorentz3-flat" => {
            let b = params.field_strength.unwrap_or(0.5);
            Scenario::new(
                name,
                Signature::new(1, 2)?,
                Domain::open_box(&[-3.0; 3], &[3.0; 3]),
                constant_metric(RMat::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -1.0, -1.0]))),
            )
            .with_connection(Arc::new(move |x: &[f64]| vec![0.0, b * x[0], 0.3 * b * x[1]]))
            .with_description("flat signature (1,2) with a constant curvature form")
        }
        other => return Err(Error::Unknown { kind: "scenario", name: other.to_string() }),
    };
    Ok(sc)
}

pub fn info(sc: &Scenario, kind: &str) -> ScenarioInfo {
    ScenarioInfo {
        name: sc.name.clone(),
        kind: kind.to_string(),
        dim: sc.dim(),
        signature: [sc.signature.r, sc.signature.s],
        pointwise: sc.backends.pointwise,
        lattice: sc.backends.lattice,
        description: sc.description.clone(),
        reference: sc.reference.keys().cloned().collect(),
    }
}
