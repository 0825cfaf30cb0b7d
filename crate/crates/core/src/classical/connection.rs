//! α-connections of an exponential family in canonical coordinates.
//!
//! The family is (+1)-flat in ξ, so the α-connection coefficients are carried
//! entirely by the skewness tensor:
//! `Γ^{(α)}_{ij,k} = −(1−α)/2 · E[(f_i−η_i)(f_j−η_j)(f_k−η_k)]`.
//! The sign comes from the convention `ρ ∝ exp(−ξ·f)`, under which the
//! canonical scores are `−(f − η)` and `∂_k V_ij = −T_ijk`.

use alloc::vec::Vec;

#[allow(unused_imports)] // used only when std is absent from the build graph
use num_traits::Float;

use super::family::CanonicalPoint;
#[cfg(test)]
use super::family::ExponentialFamily;
use crate::error::{shape, Result};

/// Fully symmetric `n×n×n` array, index `(i, j, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    n: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.n + j) * self.n + k]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// `T_ijk = E[(f_i−η_i)(f_j−η_j)(f_k−η_k)]`.
pub fn skewness_tensor(pt: &CanonicalPoint) -> Tensor3 {
    Tensor3 { n: pt.family().dim(), data: pt.third_central_moments() }
}

/// Raised-index coefficients `Γ^k_ij`, stored as `(k, i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    n: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.n + i) * self.n + j]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// `−Γ^k_ij v^i v^j`.
    pub fn acceleration(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|k| {
                let mut s = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        s += self.get(k, i, j) * v[i] * v[j];
                    }
                }
                -s
            })
            .collect()
    }
}

/// Contracts `Γ^{(α)}_{ij,l}` with the inverse Fisher matrix `V⁻¹`.
pub fn christoffel(pt: &CanonicalPoint, alpha: f64) -> Result<Christoffel> {
    let n = pt.family().dim();
    let factor = -(1.0 - alpha) / 2.0;
    if factor == 0.0 {
        return Ok(Christoffel { n, data: alloc::vec![0.0; n * n * n] });
    }
    let t = skewness_tensor(pt);
    let vinv = pt.covariance().spd_inverse()?;
    let mut data = alloc::vec![0.0; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let s: f64 = (0..n).map(|l| vinv[(k, l)] * t.get(i, j, l)).sum();
                data[(k * n + i) * n + j] = factor * s;
            }
        }
    }
    Ok(Christoffel { n, data })
}

#[derive(Debug, Clone)]
pub struct GeodesicOptions {
    /// Integration is truncated once some `|ξ^j|` exceeds this bound.
    pub coordinate_box: f64,
}

impl Default for GeodesicOptions {
    fn default() -> Self {
        Self { coordinate_box: 50.0 }
    }
}

#[derive(Debug, Clone)]
pub struct GeodesicSample {
    pub t: f64,
    pub point: CanonicalPoint,
    pub velocity: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct GeodesicPath {
    pub samples: Vec<GeodesicSample>,
    /// True when the trajectory left the coordinate box (or the faithful
    /// interior) before `t_max`.
    pub truncated: bool,
}

impl GeodesicPath {
    pub fn last(&self) -> &GeodesicSample {
        self.samples.last().expect("a path holds at least its start point")
    }
}

/// Solves `ξ̈^k + Γ^{(α)k}_{ij} ξ̇^i ξ̇^j = 0` by fixed-step RK4, sampling at
/// multiples of `dt` (the last step is shortened to land on `t_max`).
pub fn geodesic(
    start: &CanonicalPoint,
    v0: &[f64],
    alpha: f64,
    t_max: f64,
    dt: f64,
    options: &GeodesicOptions,
) -> Result<GeodesicPath> {
    let family = start.family().clone();
    let n = family.dim();
    if v0.len() != n {
        return Err(shape("initial velocity has the wrong dimension"));
    }
    if !(dt > 0.0) || !(t_max >= 0.0) || !dt.is_finite() || !t_max.is_finite() {
        return Err(crate::Error::InvalidArgument("geodesic needs dt > 0 and t_max >= 0".into()));
    }
    let accel = |xi: &[f64], v: &[f64]| -> Result<Vec<f64>> {
        if alpha == 1.0 {
            return Ok(alloc::vec![0.0; n]);
        }
        Ok(christoffel(&family.point(xi)?, alpha)?.acceleration(v))
    };
    let axpy = |a: &[f64], s: f64, b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + s * y).collect() };

    let mut samples = alloc::vec![GeodesicSample { t: 0.0, point: start.clone(), velocity: v0.to_vec() }];
    let steps = ((t_max / dt) - 1e-9).ceil().max(0.0) as usize;
    let mut xi = start.xi().to_vec();
    let mut v = v0.to_vec();
    let mut truncated = false;
    for step in 0..steps {
        let t0 = step as f64 * dt;
        let h = if step + 1 == steps { t_max - t0 } else { dt };
        let stage = || -> Result<(Vec<f64>, Vec<f64>)> {
            let k1x = v.clone();
            let k1v = accel(&xi, &v)?;
            let x2 = axpy(&xi, h / 2.0, &k1x);
            let v2 = axpy(&v, h / 2.0, &k1v);
            let k2v = accel(&x2, &v2)?;
            let x3 = axpy(&xi, h / 2.0, &v2);
            let v3 = axpy(&v, h / 2.0, &k2v);
            let k3v = accel(&x3, &v3)?;
            let x4 = axpy(&xi, h, &v3);
            let v4 = axpy(&v, h, &k3v);
            let k4v = accel(&x4, &v4)?;
            let nx = (0..n).map(|i| xi[i] + h / 6.0 * (k1x[i] + 2.0 * v2[i] + 2.0 * v3[i] + v4[i])).collect();
            let nv = (0..n).map(|i| v[i] + h / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i])).collect();
            Ok((nx, nv))
        };
        let (nx, nv) = match stage() {
            Ok(s) => s,
            Err(_) => {
                truncated = true;
                break;
            }
        };
        if nx.iter().any(|x: &f64| !x.is_finite() || x.abs() > options.coordinate_box) {
            truncated = true;
            break;
        }
        let point = match family.point(&nx) {
            Ok(p) if p.distribution().is_ok() => p,
            _ => {
                truncated = true;
                break;
            }
        };
        xi = nx;
        v = nv;
        samples.push(GeodesicSample { t: t0 + h, point, velocity: v.clone() });
    }
    Ok(GeodesicPath { samples, truncated })
}
