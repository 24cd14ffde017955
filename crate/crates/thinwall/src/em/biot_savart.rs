//! Magnetostatic vector potential of polyline currents,
//! `A(x) = sum_seg I int dl' / |x - x'|`, integrated per segment with
//! Gauss–Legendre quadrature. With `mu0/(4 pi) = 1` absorbed, no
//! prefactor appears.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::Vector3;

use crate::err::{Error, Result};

use super::field::VectorPotentialField;

/// One polyline current: straight segments through `points`, closed back
/// to the start when `closed` is set.
#[derive(Debug, Clone)]
pub struct CurrentSource {
    pub points: Vec<Vector3<f64>>,
    pub current: f64,
    pub closed: bool,
}

impl CurrentSource {
    /// Regular polygon approximating a circular loop of radius `radius`
    /// about `center`, in the plane orthogonal to `normal`.
    pub fn circular_loop(
        center: Vector3<f64>,
        radius: f64,
        normal: Vector3<f64>,
        current: f64,
        segments: usize,
    ) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Config(format!("loop radius must be positive, got {radius}")));
        }
        if segments < 8 {
            return Err(Error::Config(format!(
                "loop discretization needs >= 8 segments, got {segments}"
            )));
        }
        let nn = normal.norm();
        if !(nn > 0.0) || !nn.is_finite() {
            return Err(Error::Config("loop normal must be a nonzero vector".into()));
        }
        let n = normal / nn;
        // Any unit vector orthogonal to n.
        let seed = if n.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
        let e1 = (seed - n * seed.dot(&n)).normalize();
        let e2 = n.cross(&e1);
        let points = (0..segments)
            .map(|i| {
                let phi = 2.0 * PI * i as f64 / segments as f64;
                center + (e1 * phi.cos() + e2 * phi.sin()) * radius
            })
            .collect();
        Ok(CurrentSource { points, current, closed: true })
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.len() < 2 {
            return Err(Error::Config("a current source needs at least two points".into()));
        }
        if self.points.iter().any(|p| !p.iter().all(|c| c.is_finite()))
            || !self.current.is_finite()
        {
            return Err(Error::Config("current source contains non-finite data".into()));
        }
        Ok(())
    }

    /// Iterate over the segments (including the closing one).
    fn segments(&self) -> impl Iterator<Item = (Vector3<f64>, Vector3<f64>)> + '_ {
        let n = self.points.len();
        let m = if self.closed { n } else { n - 1 };
        (0..m).map(move |i| (self.points[i], self.points[(i + 1) % n]))
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration on
/// the Legendre polynomial from the Chebyshev initial guess.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1 && n <= 64, "quadrature order out of range");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(x) and P'_n(x).
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n == 1 {
        nodes[0] = 0.0;
        weights[0] = 2.0;
    }
    (nodes, weights)
}

/// Vector potential of a set of polyline currents.
///
/// `quadrature_order` Gauss–Legendre nodes per segment (typically 8–16).
/// Evaluation within `1e-9` of a segment raises
/// [`Error::SourceOnSurface`] — surfaced as a NaN guard at sampling time,
/// since the closure interface cannot return errors; callers sampling
/// through [`crate::em::decompose_on_surface`] get the typed error.
pub fn biot_savart_potential(
    sources: Vec<CurrentSource>,
    quadrature_order: usize,
) -> Result<VectorPotentialField> {
    if sources.is_empty() {
        return Err(Error::Config("no current sources given".into()));
    }
    if quadrature_order < 2 || quadrature_order > 64 {
        return Err(Error::Config(format!(
            "quadrature order must be in [2, 64], got {quadrature_order}"
        )));
    }
    for s in &sources {
        s.validate()?;
    }
    let (nodes, weights) = gauss_legendre(quadrature_order);
    let n_src = sources.len();
    let field = move |x: &Vector3<f64>| {
        let mut a = Vector3::zeros();
        for src in &sources {
            for (p0, p1) in src.segments() {
                let dl = p1 - p0;
                let half = 0.5 * dl;
                let mid = p0 + half;
                let mut seg = 0.0;
                for (t, w) in nodes.iter().zip(&weights) {
                    let r = x - (mid + half * *t);
                    let d = r.norm();
                    // Too close to the source: poison the result so the
                    // decomposition layer can detect and reject it.
                    if d < 1e-9 {
                        return Vector3::repeat(f64::NAN);
                    }
                    seg += w / d;
                }
                // The Jacobian |dl|/2 combines with the direction to dl/2.
                a += half * (seg * src.current);
            }
        }
        a
    };
    Ok(VectorPotentialField::new(
        format!("biot_savart({n_src} sources, gl{quadrature_order})"),
        Arc::new(field),
    ))
}

/// Circular current loop via quadrature over a polygon approximation.
pub fn loop_potential(
    center: Vector3<f64>,
    radius: f64,
    normal: Vector3<f64>,
    current: f64,
    segments: usize,
    quadrature_order: usize,
) -> Result<VectorPotentialField> {
    let src = CurrentSource::circular_loop(center, radius, normal, current, segments)?;
    let mut f = biot_savart_potential(vec![src], quadrature_order)?;
    f.label = format!("loop(r={radius}, I={current})");
    Ok(f)
}

/// Solenoid: `turns` coaxial loops spread uniformly over `length` along
/// `axis`, centred at `center`.
pub fn solenoid_potential(
    center: Vector3<f64>,
    axis: Vector3<f64>,
    radius: f64,
    length: f64,
    turns: usize,
    current: f64,
    segments: usize,
    quadrature_order: usize,
) -> Result<VectorPotentialField> {
    if turns < 1 {
        return Err(Error::Config("solenoid needs at least one turn".into()));
    }
    if !(length > 0.0) || !length.is_finite() {
        return Err(Error::Config(format!("solenoid length must be positive, got {length}")));
    }
    let an = axis.norm();
    if !(an > 0.0) || !an.is_finite() {
        return Err(Error::Config("solenoid axis must be a nonzero vector".into()));
    }
    let axis = axis / an;
    let sources: Result<Vec<_>> = (0..turns)
        .map(|i| {
            let frac = if turns == 1 {
                0.0
            } else {
                i as f64 / (turns as f64 - 1.0) - 0.5
            };
            CurrentSource::circular_loop(
                center + axis * (frac * length),
                radius,
                axis,
                current,
                segments,
            )
        })
        .collect();
    let mut f = biot_savart_potential(sources?, quadrature_order)?;
    f.label = format!("solenoid(r={radius}, l={length}, turns={turns}, I={current})");
    Ok(f)
}
