//! Geodesics of ℍ² tracked in moving local frames.
//!
//! Far from the origin, hyperboloid coordinates grow like `e^d` and products of
//! long words lose relative accuracy like `ε·e^{2d}`. The search therefore never
//! forms long products: each orbit point carries the segment's line expressed in
//! its own frame, obtained from its parent's by a single generator step, plus the
//! accumulated logarithmic scale needed to recover the global arc-length parameter.

use nalgebra::{Matrix3, Vector3};

pub(crate) type V3 = Vector3<f64>;
pub(crate) type M3 = Matrix3<f64>;

pub(crate) fn form3(a: &V3, b: &V3) -> f64 {
    a.x * b.x + a.y * b.y - a.z * b.z
}

pub(crate) fn origin3() -> V3 {
    V3::new(0.0, 0.0, 1.0)
}

/// Inverse of a Lorentz matrix, `ηMᵀη`.
pub(crate) fn lorentz_inverse(m: &M3) -> M3 {
    let mut t = m.transpose();
    t[(0, 2)] = -t[(0, 2)];
    t[(1, 2)] = -t[(1, 2)];
    t[(2, 0)] = -t[(2, 0)];
    t[(2, 1)] = -t[(2, 1)];
    t
}

/// Scales a future null vector to last coordinate 1.
pub(crate) fn normalize_null(v: &V3) -> (V3, f64) {
    let s = v.z;
    let mut u = v / s;
    let r = (u.x * u.x + u.y * u.y).sqrt();
    u.x /= r;
    u.y /= r;
    u.z = 1.0;
    (u, s)
}

pub(crate) fn distance3(a: &V3, b: &V3) -> f64 {
    (-form3(a, b)).max(1.0).acosh()
}

/// Unit normal `N` of the plane through the origin containing `a` and `b`,
/// oriented so that `N ∝ η(a × b)`.
pub(crate) fn line_normal(minus: &V3, plus: &V3) -> V3 {
    let c = minus.cross(plus);
    let n = V3::new(c.x, c.y, -c.z);
    n / form3(&n, &n).sqrt()
}

/// Point at local parameter `s` on the line `minus → plus` (both normalized),
/// and the unit tangent there.
pub(crate) fn point_on_line(minus: &V3, plus: &V3, s: f64) -> (V3, V3) {
    let c = 1.0 / (-2.0 * form3(plus, minus)).sqrt();
    let (ep, em) = (s.exp(), (-s).exp());
    (c * (ep * plus + em * minus), c * (ep * plus - em * minus))
}

/// Local parameter `½ log(⟨x,minus⟩/⟨x,plus⟩)` of a point.
pub(crate) fn line_parameter(minus: &V3, plus: &V3, x: &V3) -> f64 {
    0.5 * (form3(x, minus) / form3(x, plus)).ln()
}

/// Sign of the crossing of the directed line `seg` by a directed line towards
/// `lift_plus`, at the point `x`: the orientation of `(seg tangent, lift tangent)`
/// relative to `(e₁, e₂)`. Returns the sine of the crossing angle.
pub(crate) fn crossing_sine(seg_tangent: &V3, lift_plus: &V3, x: &V3) -> f64 {
    let t = lift_plus + form3(lift_plus, x) * x;
    let t = t / form3(&t, &t).sqrt();
    M3::from_columns(&[*seg_tangent, t, *x]).determinant()
}

/// A directed geodesic seen from a moving frame.
#[derive(Debug, Clone, Copy)]
pub(crate) struct FrameLine {
    pub minus: V3,
    pub plus: V3,
    log_minus: f64,
    log_plus: f64,
}

impl FrameLine {
    pub fn new(minus: V3, plus: V3) -> Self {
        let (minus, _) = normalize_null(&minus);
        let (plus, _) = normalize_null(&plus);
        FrameLine { minus, plus, log_minus: 0.0, log_plus: 0.0 }
    }

    /// The line through two hyperboloid points, and the parameters of those points.
    pub fn through(p: &V3, q: &V3) -> (Self, f64, f64) {
        let len = distance3(p, q);
        let u = (q + form3(q, p) * p) / len.sinh();
        let line = FrameLine::new(p - u, p + u);
        let sp = line_parameter(&line.minus, &line.plus, p);
        (line, sp, sp + len)
    }

    /// Re-expresses the line after applying `step` to the frame.
    pub fn transform(&self, step: &M3) -> Self {
        let (minus, lm) = normalize_null(&(step * self.minus));
        let (plus, lp) = normalize_null(&(step * self.plus));
        FrameLine {
            minus,
            plus,
            log_minus: self.log_minus + lm.ln(),
            log_plus: self.log_plus + lp.ln(),
        }
    }

    /// Global parameter = local parameter + offset.
    pub fn offset(&self) -> f64 {
        0.5 * (self.log_minus - self.log_plus)
    }

    pub fn normal(&self) -> V3 {
        line_normal(&self.minus, &self.plus)
    }

    /// Fermi coordinates of the frame origin: global foot parameter and signed distance.
    pub fn fermi(&self) -> (f64, f64) {
        let n = self.normal();
        (self.offset(), (-n.z).asinh())
    }

    /// Distance from the frame origin to the piece `[lo, hi]` (global parameters).
    pub fn distance_to_piece(&self, lo: f64, hi: f64) -> f64 {
        let (foot, d) = self.fermi();
        let gap = if foot < lo {
            lo - foot
        } else if foot > hi {
            foot - hi
        } else {
            0.0
        };
        if gap == 0.0 {
            d.abs()
        } else {
            (d.cosh() * gap.cosh()).acosh()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn boost_x(t: f64) -> M3 {
        M3::new(t.cosh(), 0.0, t.sinh(), 0.0, 1.0, 0.0, t.sinh(), 0.0, t.cosh())
    }

    #[test]
    fn line_through_points_has_unit_speed() {
        let p = origin3();
        let q = boost_x(2.0) * V3::new(0.3f64.sinh(), 0.0, 0.3f64.cosh());
        let q = M3::new(1.0, 0.0, 0.0, 0.0, 0.6f64.cos(), -0.6f64.sin(), 0.0, 0.6f64.sin(), 0.6f64.cos()) * q;
        // q is just some point; check parameters and distance agree
        let q = V3::new(q.x, q.y, (1.0 + q.x * q.x + q.y * q.y).sqrt());
        let (line, sp, sq) = FrameLine::through(&p, &q);
        assert!((sq - sp - distance3(&p, &q)).abs() < 1e-12);
        let (x, t) = point_on_line(&line.minus, &line.plus, sq);
        assert!((x - q).norm() < 1e-10);
        assert!((form3(&t, &t) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn transformed_frame_preserves_global_parameter() {
        let (line, _, _) = FrameLine::through(&origin3(), &(boost_x(1.5) * origin3()));
        let step = lorentz_inverse(&(boost_x(0.7)));
        let local = line.transform(&step);
        // a point at global parameter 0.4 maps to local parameter 0.4 − offset
        let (x, _) = point_on_line(&line.minus, &line.plus, 0.4);
        let xl = step * x;
        let s_loc = line_parameter(&local.minus, &local.plus, &xl);
        assert!((s_loc + local.offset() - 0.4).abs() < 1e-12);
        let (foot, d) = local.fermi();
        assert!((foot - 0.7).abs() < 1e-12 && d.abs() < 1e-12);
    }
}
