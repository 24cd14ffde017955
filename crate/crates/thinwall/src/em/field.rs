//! Vector potentials `A(x)` (plus an optional scalar potential `A_t`),
//! represented as shareable closures so grid code can sample them at
//! surface nodes and at normal offsets.
//!
//! Units: `mu0 / (4 pi) = 1` is absorbed, so a straight wire of current
//! `I` gives `A = -2 I ln(rho) e_axis`.

use std::sync::Arc;

use nalgebra::Vector3;

use crate::err::{Error, Result};

type AFn = Arc<dyn Fn(&Vector3<f64>) -> Vector3<f64> + Send + Sync>;
type PhiFn = Arc<dyn Fn(&Vector3<f64>) -> f64 + Send + Sync>;

/// A vector potential with an optional time component.
#[derive(Clone)]
pub struct VectorPotentialField {
    a: AFn,
    a_t: PhiFn,
    /// Identifier recorded in operator metadata; two results are only
    /// comparable when their field labels agree.
    pub label: String,
}

impl std::fmt::Debug for VectorPotentialField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VectorPotentialField").field("label", &self.label).finish()
    }
}

impl VectorPotentialField {
    /// Build from closures.
    pub fn new(label: impl Into<String>, a: AFn) -> Self {
        VectorPotentialField { a, a_t: Arc::new(|_| 0.0), label: label.into() }
    }

    /// Attach a scalar potential `A_t`.
    pub fn with_scalar(mut self, a_t: PhiFn) -> Self {
        self.a_t = a_t;
        self
    }

    /// Evaluate `A` at a point.
    pub fn a(&self, x: &Vector3<f64>) -> Vector3<f64> {
        (self.a)(x)
    }

    /// Evaluate the scalar potential at a point.
    pub fn a_t(&self, x: &Vector3<f64>) -> f64 {
        (self.a_t)(x)
    }

    /// `A = 0`.
    pub fn zero() -> Self {
        VectorPotentialField::new("zero", Arc::new(|_| Vector3::zeros()))
    }

    /// Constant potential `A(x) = a0`. Pure gauge (zero field), but it
    /// exercises every coupling term, which makes it the sharpest probe
    /// of the operator bookkeeping.
    pub fn uniform(a0: Vector3<f64>) -> Self {
        VectorPotentialField::new(
            format!("uniform({}, {}, {})", a0.x, a0.y, a0.z),
            Arc::new(move |_| a0),
        )
    }

    /// Infinite straight wire with current `current` through `point`
    /// along the unit of `direction`: `A = -2 I ln(rho) t` with `rho` the
    /// distance to the axis.
    pub fn wire(point: Vector3<f64>, direction: Vector3<f64>, current: f64) -> Result<Self> {
        let n = direction.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Config("wire direction must be a nonzero vector".into()));
        }
        let t = direction / n;
        Ok(VectorPotentialField::new(
            format!("wire(I={current})"),
            Arc::new(move |x: &Vector3<f64>| {
                let d = x - point;
                let perp = d - t * d.dot(&t);
                let rho = perp.norm();
                t * (-2.0 * current * rho.ln())
            }),
        ))
    }

    /// Azimuthal flux-line potential about the z-axis,
    /// `A = k (-y, x, 0) / rho^2`: curl-free away from the axis, with
    /// line integral `2 pi k` around it. The standard probe for
    /// flux-threaded ring spectra.
    pub fn azimuthal(strength: f64) -> Self {
        VectorPotentialField::new(
            format!("azimuthal(k={strength})"),
            Arc::new(move |x: &Vector3<f64>| {
                let rho2 = x.x * x.x + x.y * x.y;
                Vector3::new(-x.y, x.x, 0.0) * (strength / rho2)
            }),
        )
    }

    /// Pointwise sum of two potentials.
    pub fn superpose(self, other: VectorPotentialField) -> Self {
        let a1 = self.a.clone();
        let a2 = other.a.clone();
        let p1 = self.a_t.clone();
        let p2 = other.a_t.clone();
        VectorPotentialField {
            a: Arc::new(move |x| a1(x) + a2(x)),
            a_t: Arc::new(move |x| p1(x) + p2(x)),
            label: format!("{} + {}", self.label, other.label),
        }
    }

    /// The same potential scaled by `s` (scalar part included).
    pub fn scaled(&self, s: f64) -> Self {
        let a = self.a.clone();
        let p = self.a_t.clone();
        VectorPotentialField {
            a: Arc::new(move |x| a(x) * s),
            a_t: Arc::new(move |x| p(x) * s),
            label: format!("{} * {s}", self.label),
        }
    }
}

/// A differentiable gauge function `f`; transforms `A -> A + grad f`.
#[derive(Clone)]
pub struct GaugeFunction {
    f: PhiFn,
    grad: Option<AFn>,
    pub label: String,
}

impl GaugeFunction {
    pub fn new(label: impl Into<String>, f: PhiFn) -> Self {
        GaugeFunction { f, grad: None, label: label.into() }
    }

    pub fn with_gradient(mut self, grad: AFn) -> Self {
        self.grad = Some(grad);
        self
    }

    /// Linear gauge `f(x) = c . x`, `grad f = c`.
    pub fn linear(c: Vector3<f64>) -> Self {
        GaugeFunction {
            f: Arc::new(move |x: &Vector3<f64>| c.dot(x)),
            grad: Some(Arc::new(move |_| c)),
            label: format!("linear({}, {}, {})", c.x, c.y, c.z),
        }
    }

    /// Quadratic gauge `f(x) = 1/2 x . diag(d) . x`.
    pub fn quadratic(d: Vector3<f64>) -> Self {
        GaugeFunction {
            f: Arc::new(move |x: &Vector3<f64>| {
                0.5 * (d.x * x.x * x.x + d.y * x.y * x.y + d.z * x.z * x.z)
            }),
            grad: Some(Arc::new(move |x: &Vector3<f64>| {
                Vector3::new(d.x * x.x, d.y * x.y, d.z * x.z)
            })),
            label: format!("quadratic({}, {}, {})", d.x, d.y, d.z),
        }
    }

    pub fn value(&self, x: &Vector3<f64>) -> f64 {
        (self.f)(x)
    }

    /// Gradient: analytic when supplied, otherwise fourth-order central
    /// differences with step `delta`.
    pub fn gradient(&self, x: &Vector3<f64>, delta: f64) -> Vector3<f64> {
        if let Some(g) = &self.grad {
            return g(x);
        }
        let mut out = Vector3::zeros();
        for k in 0..3 {
            let mut e = Vector3::zeros();
            e[k] = 1.0;
            let fp2 = (self.f)(&(x + e * (2.0 * delta)));
            let fp1 = (self.f)(&(x + e * delta));
            let fm1 = (self.f)(&(x - e * delta));
            let fm2 = (self.f)(&(x - e * (2.0 * delta)));
            out[k] = (-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * delta);
        }
        out
    }
}

/// `A' = A + grad f`. The magnetic field (curl) is unchanged; the crate's
/// physics must respond to such a transformation only through the phases
/// it is allowed to.
pub fn gauge_transform(
    field: &VectorPotentialField,
    gauge: &GaugeFunction,
    fd_delta: f64,
) -> VectorPotentialField {
    let a = field.a.clone();
    let p = field.a_t.clone();
    let g = gauge.clone();
    VectorPotentialField {
        a: Arc::new(move |x| a(x) + g.gradient(x, fd_delta)),
        a_t: p,
        label: format!("{} + grad {}", field.label, gauge.label),
    }
}
