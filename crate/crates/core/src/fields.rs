//! Field types, the null frame and the dictionary between the metric block
//! `g` and the variables `(Lambda, phi, alpha)`.
//!
//! The block is parametrized as
//! `g = alpha * [[cosh L + cos 2phi sinh L, sin 2phi sinh L], [sin 2phi sinh L, cosh L - cos 2phi sinh L]]`
//! so that `det g = alpha^2`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::alpha::AlphaData;
use crate::error::{BzError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpacetimePoint {
    pub t: f64,
    pub x: f64,
}

impl SpacetimePoint {
    pub fn new(t: f64, x: f64) -> Self {
        Self { t, x }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullCoords {
    pub u: f64,
    pub ubar: f64,
}

impl NullCoords {
    pub fn to_point(self) -> SpacetimePoint {
        SpacetimePoint::new(self.u + self.ubar, self.u - self.ubar)
    }
}

pub fn null_coords(p: SpacetimePoint) -> NullCoords {
    NullCoords {
        u: 0.5 * (p.t + p.x),
        ubar: 0.5 * (p.t - p.x),
    }
}

/// Value and first derivatives of a scalar field at a point.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct FirstJet {
    pub value: f64,
    pub dt: f64,
    pub dx: f64,
}

impl FirstJet {
    pub fn new(value: f64, dt: f64, dx: f64) -> Self {
        Self { value, dt, dx }
    }

    pub fn scale(self, a: f64) -> Self {
        Self::new(a * self.value, a * self.dt, a * self.dx)
    }
}

impl std::ops::Add for FirstJet {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self::new(self.value + o.value, self.dt + o.dt, self.dx + o.dx)
    }
}

/// `(L f, Lbar f)` with `L = dt + dx`, `Lbar = dt - dx`.
pub fn null_derivatives(j: FirstJet) -> (f64, f64) {
    (j.dt + j.dx, j.dt - j.dx)
}

/// Minkowski null form with signature (-,+).
pub fn null_form_q0(f: FirstJet, g: FirstJet) -> f64 {
    f.dx * g.dx - f.dt * g.dt
}

/// Uniform grid; serialized as `{x_min, x_max, n}` with `dx` derived.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct Grid1D {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
    pub dx: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSpec {
    x_min: f64,
    x_max: f64,
    n: usize,
}

impl TryFrom<GridSpec> for Grid1D {
    type Error = BzError;
    fn try_from(g: GridSpec) -> Result<Self> {
        Grid1D::new(g.x_min, g.x_max, g.n)
    }
}

impl From<Grid1D> for GridSpec {
    fn from(g: Grid1D) -> Self {
        GridSpec {
            x_min: g.x_min,
            x_max: g.x_max,
            n: g.n,
        }
    }
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if n < 8 {
            return Err(BzError::InvalidGrid(format!("need n >= 8, got {n}")));
        }
        if !(x_min.is_finite() && x_max.is_finite()) || x_max <= x_min {
            return Err(BzError::InvalidGrid(format!("bad interval [{x_min}, {x_max}]")));
        }
        Ok(Self {
            x_min,
            x_max,
            n,
            dx: (x_max - x_min) / (n - 1) as f64,
        })
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.x_max
        } else {
            self.x_min + i as f64 * self.dx
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Grid with `2n - 1` nodes on the same interval.
    pub fn refined(&self) -> Self {
        Self::new(self.x_min, self.x_max, 2 * self.n - 1).expect("refinement of a valid grid")
    }

    pub fn same_as(&self, o: &Grid1D) -> bool {
        self.n == o.n && self.x_min == o.x_min && self.x_max == o.x_max
    }
}

/// Samples of `(Lambda~, dt Lambda~, phi, dt phi, ln f, dt ln f)` at one time level,
/// with `Lambda = lambda0 + Lambda~`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub time: f64,
    pub grid: Grid1D,
    pub lambda_tilde: Vec<f64>,
    pub pi: Vec<f64>,
    pub phi: Vec<f64>,
    pub xi: Vec<f64>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    pub lambda0: f64,
}

impl FieldState {
    pub fn zeros(grid: Grid1D, time: f64, lambda0: f64) -> Self {
        let n = grid.n;
        Self {
            time,
            grid,
            lambda_tilde: vec![0.0; n],
            pi: vec![0.0; n],
            phi: vec![0.0; n],
            xi: vec![0.0; n],
            v: vec![0.0; n],
            w: vec![0.0; n],
            lambda0,
        }
    }

    pub fn len(&self) -> usize {
        self.grid.n
    }

    pub fn is_empty(&self) -> bool {
        self.grid.n == 0
    }

    pub fn lambda(&self, i: usize) -> f64 {
        self.lambda0 + self.lambda_tilde[i]
    }

    pub fn arrays(&self) -> [&Vec<f64>; 6] {
        [&self.lambda_tilde, &self.pi, &self.phi, &self.xi, &self.v, &self.w]
    }

    pub fn arrays_mut(&mut self) -> [&mut Vec<f64>; 6] {
        [
            &mut self.lambda_tilde,
            &mut self.pi,
            &mut self.phi,
            &mut self.xi,
            &mut self.v,
            &mut self.w,
        ]
    }

    pub fn check_lengths(&self) -> Result<()> {
        let n = self.grid.n;
        if self.arrays().iter().any(|a| a.len() != n) {
            return Err(BzError::GridMismatch(format!("field arrays must all have {n} entries")));
        }
        Ok(())
    }

    /// Enforces `|lambda0 + Lambda~| >= fraction * lambda0` at every node.
    pub fn check_guard(&self, fraction: f64) -> Result<()> {
        let guard = fraction * self.lambda0;
        for (i, lt) in self.lambda_tilde.iter().enumerate() {
            let l = self.lambda0 + lt;
            if !l.is_finite() {
                return Err(BzError::NonFinite(format!("Lambda at node {i}")));
            }
            if l.abs() < guard {
                return Err(BzError::LambdaDegenerate {
                    node: i,
                    value: l.abs(),
                    guard,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricBlock {
    pub g11: f64,
    pub g12: f64,
    pub g22: f64,
    pub f: Option<f64>,
}

impl MetricBlock {
    /// `g11 g22 - g12^2` with Kahan's fused difference of products.
    pub fn det(&self) -> f64 {
        let w = self.g12 * self.g12;
        let e = (-self.g12).mul_add(self.g12, w);
        let f = self.g11.mul_add(self.g22, -w);
        f + e
    }

    pub fn trace(&self) -> f64 {
        self.g11 + self.g22
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            g11: s * self.g11,
            g12: s * self.g12,
            g22: s * self.g22,
            f: self.f,
        }
    }
}

pub fn metric_from_fields(lambda: f64, phi: f64, alpha: f64, f: Option<f64>) -> Result<MetricBlock> {
    if !(alpha > 0.0) {
        return Err(BzError::NonPositiveAlpha {
            alpha,
            t: f64::NAN,
            x: f64::NAN,
        });
    }
    if let Some(fv) = f {
        if !(fv > 0.0) {
            return Err(BzError::NonPositiveF(fv));
        }
    }
    let (ch, sh) = (lambda.cosh(), lambda.sinh());
    let (s2, c2) = (2.0 * phi).sin_cos();
    Ok(MetricBlock {
        g11: alpha * (ch + c2 * sh),
        g12: alpha * s2 * sh,
        g22: alpha * (ch - c2 * sh),
        f,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractedFields {
    pub lambda: f64,
    pub phi: f64,
    pub alpha: f64,
    /// Set when `Lambda = 0` and the angle is undetermined (returned as 0).
    pub degenerate_angle: bool,
}

pub fn fields_from_metric(m: &MetricBlock) -> Result<ExtractedFields> {
    let det = m.det();
    let trace = m.trace();
    if !(det > 0.0) || !(trace > 0.0) {
        return Err(BzError::NotPositiveDefinite { det, trace });
    }
    let alpha = det.sqrt();
    let (a, b, c) = (m.g11 / alpha, m.g12 / alpha, m.g22 / alpha);
    // sinh L from the traceless part is better conditioned than arccosh near 0
    let half_diff = 0.5 * (a - c);
    let sh = half_diff.hypot(b);
    let lambda = sh.asinh();
    if sh == 0.0 {
        return Ok(ExtractedFields {
            lambda: 0.0,
            phi: 0.0,
            alpha,
            degenerate_angle: true,
        });
    }
    let mut two_phi = b.atan2(half_diff);
    if two_phi < 0.0 {
        two_phi += 2.0 * PI;
    }
    let mut phi = 0.5 * two_phi;
    if phi >= PI {
        phi -= PI;
    }
    Ok(ExtractedFields {
        lambda,
        phi,
        alpha,
        degenerate_angle: false,
    })
}

/// Shift `phi` by a multiple of pi so it lies closest to `reference`.
pub fn unwrap_angle(phi: f64, reference: f64) -> f64 {
    phi + ((reference - phi) / PI).round() * PI
}

/// The gauge symmetry `phi -> phi + k pi`, `alpha -> c1 alpha`, `f -> c2 f`.
pub fn gauge_transform(
    state: &FieldState,
    alpha: &AlphaData,
    k: i64,
    c1: f64,
    c2: f64,
) -> Result<(FieldState, AlphaData)> {
    if !(c1 > 0.0) || !(c2 > 0.0) {
        return Err(BzError::NonPositiveScale { c1, c2 });
    }
    let mut out = state.clone();
    let shift = k as f64 * PI;
    out.phi.iter_mut().for_each(|p| *p += shift);
    let lc2 = c2.ln();
    out.v.iter_mut().for_each(|v| *v += lc2);
    let mut a = alpha.clone();
    a.scale *= c1;
    Ok((out, a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn null_coordinate_examples() {
        let n = null_coords(SpacetimePoint::new(0.0, 0.0));
        assert_eq!((n.u, n.ubar), (0.0, 0.0));
        let n = null_coords(SpacetimePoint::new(2.0, 0.0));
        assert_eq!((n.u, n.ubar), (1.0, 1.0));
        let n = null_coords(SpacetimePoint::new(3.0, 1.0));
        assert_eq!((n.u, n.ubar), (2.0, 1.0));
    }

    #[test]
    fn null_derivative_examples() {
        assert_eq!(null_derivatives(FirstJet::new(0.0, 1.0, 0.0)), (1.0, 1.0));
        assert_eq!(null_derivatives(FirstJet::new(0.0, 1.0, 1.0)), (2.0, 0.0));
        assert_eq!(null_derivatives(FirstJet::new(0.0, 2.0, -3.0)), (-1.0, 5.0));
    }

    #[test]
    fn null_vectors_on_null_coordinates() {
        // u = (t+x)/2 has jet (1/2, 1/2); ubar has (1/2, -1/2)
        let u = FirstJet::new(0.0, 0.5, 0.5);
        let ub = FirstJet::new(0.0, 0.5, -0.5);
        assert_eq!(null_derivatives(u), (1.0, 0.0));
        assert_eq!(null_derivatives(ub), (0.0, 1.0));
    }

    #[test]
    fn q0_examples() {
        let tl = FirstJet::new(0.0, 1.0, 0.0);
        assert_eq!(null_form_q0(tl, tl), -1.0);
        let nl = FirstJet::new(0.0, 1.0, 1.0);
        assert_eq!(null_form_q0(nl, nl), 0.0);
        let a = FirstJet::new(0.0, 1.0, 2.0);
        let b = FirstJet::new(0.0, 3.0, 4.0);
        assert_eq!(null_form_q0(a, b), 5.0);
    }

    #[test]
    fn metric_examples() {
        let m = metric_from_fields(0.0, 1.234, 1.0, None).unwrap();
        assert_eq!((m.g11, m.g12, m.g22), (1.0, 0.0, 1.0));

        let m = metric_from_fields(2f64.ln(), 0.0, 1.0, None).unwrap();
        assert_relative_eq!(m.g11, 2.0, epsilon = 1e-15);
        assert_relative_eq!(m.g22, 0.5, epsilon = 1e-15);
        assert_eq!(m.g12, 0.0);

        let m = metric_from_fields(2f64.ln(), PI / 4.0, 1.0, None).unwrap();
        assert_relative_eq!(m.g11, 1.25, epsilon = 1e-15);
        assert_relative_eq!(m.g12, 0.75, epsilon = 1e-15);
        assert_relative_eq!(m.g22, 1.25, epsilon = 1e-15);
        assert_relative_eq!(m.det(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn metric_rejects_bad_alpha_and_f() {
        assert!(matches!(
            metric_from_fields(0.1, 0.0, 0.0, None),
            Err(BzError::NonPositiveAlpha { .. })
        ));
        assert!(matches!(
            metric_from_fields(0.1, 0.0, 1.0, Some(-1.0)),
            Err(BzError::NonPositiveF(_))
        ));
    }

    #[test]
    fn extraction_examples() {
        let id = MetricBlock {
            g11: 1.0,
            g12: 0.0,
            g22: 1.0,
            f: None,
        };
        let e = fields_from_metric(&id).unwrap();
        assert_eq!((e.lambda, e.phi, e.alpha), (0.0, 0.0, 1.0));
        assert!(e.degenerate_angle);

        let d = MetricBlock {
            g11: 2.0,
            g12: 0.0,
            g22: 0.5,
            f: None,
        };
        let e = fields_from_metric(&d).unwrap();
        assert_relative_eq!(e.lambda, 2f64.ln(), epsilon = 1e-15);
        assert_eq!(e.phi, 0.0);
        assert_relative_eq!(e.alpha, 1.0, epsilon = 1e-15);

        let s3 = 3f64.sqrt();
        let m = MetricBlock {
            g11: 3.5,
            g12: s3 / 2.0,
            g22: 0.5,
            f: None,
        };
        let e = fields_from_metric(&m).unwrap();
        assert_relative_eq!(e.lambda, 2f64.acosh(), epsilon = 1e-14);
        assert_relative_eq!(e.lambda, 1.3169578969248166, epsilon = 1e-14);
        assert_relative_eq!(e.phi, PI / 12.0, epsilon = 1e-14);
        assert_relative_eq!(e.alpha, 1.0, epsilon = 1e-14);
        let back = metric_from_fields(e.lambda, e.phi, e.alpha, None).unwrap();
        assert_relative_eq!(back.g11, 3.5, epsilon = 1e-13);
        assert_relative_eq!(back.g12, s3 / 2.0, epsilon = 1e-13);
    }

    #[test]
    fn extraction_rejects_indefinite() {
        let m = MetricBlock {
            g11: 1.0,
            g12: 2.0,
            g22: 1.0,
            f: None,
        };
        assert!(matches!(
            fields_from_metric(&m),
            Err(BzError::NotPositiveDefinite { .. })
        ));
        let m = MetricBlock {
            g11: -1.0,
            g12: 0.0,
            g22: -1.0,
            f: None,
        };
        assert!(fields_from_metric(&m).is_err());
    }

    #[test]
    fn grid_spacing_and_refinement() {
        let g = Grid1D::new(-1.0, 1.0, 9).unwrap();
        assert_eq!(g.dx, 0.25);
        assert_eq!(g.x(8), 1.0);
        let r = g.refined();
        assert_eq!(r.n, 17);
        assert_eq!(r.dx, 0.125);
        assert!(Grid1D::new(0.0, 1.0, 7).is_err());
        assert!(Grid1D::new(1.0, 0.0, 9).is_err());
    }

    #[test]
    fn guard_detects_degeneracy() {
        let g = Grid1D::new(0.0, 1.0, 9).unwrap();
        let mut s = FieldState::zeros(g, 0.0, 1.0);
        assert!(s.check_guard(0.5).is_ok());
        s.lambda_tilde[3] = -0.6;
        assert!(matches!(
            s.check_guard(0.5),
            Err(BzError::LambdaDegenerate { node: 3, .. })
        ));
    }

    #[test]
    fn gauge_rejects_nonpositive_scale() {
        let g = Grid1D::new(0.0, 1.0, 9).unwrap();
        let s = FieldState::zeros(g, 0.0, 1.0);
        let a = AlphaData::zero();
        assert!(gauge_transform(&s, &a, 0, 0.0, 1.0).is_err());
        assert!(gauge_transform(&s, &a, 0, 1.0, -2.0).is_err());
        let (s2, a2) = gauge_transform(&s, &a, 0, 1.0, 1.0).unwrap();
        assert_eq!(s2, s);
        assert_eq!(a2, a);
    }

    proptest! {
        #[test]
        fn det_equals_alpha_squared(l in -20.0f64..20.0, phi in 0.0f64..(2.0 * PI), a in 1e-3f64..1e3) {
            let m = metric_from_fields(l, phi, a, None).unwrap();
            let det = m.det();
            // cancellation in g11 g22 - g12^2 grows like cosh^2 L
            let slack = 1e-12f64.max(4.0 * f64::EPSILON * l.cosh().powi(2));
            prop_assert!(((det - a * a) / (a * a)).abs() <= slack);
        }

        #[test]
        // conditioning of sqrt(det) degrades like cosh^2 Lambda, so Lambda is kept moderate
        fn extraction_round_trip(l in 1e-6f64..5.0, phi in 0.0f64..PI, a in 1e-3f64..1e3) {
            let m = metric_from_fields(l, phi, a, None).unwrap();
            let e = fields_from_metric(&m).unwrap();
            prop_assert!((e.lambda - l).abs() <= 1e-10 * l.max(1.0));
            let dphi = unwrap_angle(e.phi, phi) - phi;
            prop_assert!(dphi.abs() <= 1e-8_f64.max(1e-10 / l.sinh()));
            prop_assert!(((e.alpha - a) / a).abs() <= 1e-10);
        }

        #[test]
        fn q0_bilinear_symmetric(
            f in prop::array::uniform2(-1e3f64..1e3),
            g in prop::array::uniform2(-1e3f64..1e3),
            h in prop::array::uniform2(-1e3f64..1e3),
            a in -4i32..4, b in -4i32..4,
        ) {
            let (jf, jg, jh) = (
                FirstJet::new(0.0, f[0], f[1]),
                FirstJet::new(0.0, g[0], g[1]),
                FirstJet::new(0.0, h[0], h[1]),
            );
            prop_assert_eq!(null_form_q0(jf, jg), null_form_q0(jg, jf));
            // small integer coefficients keep the arithmetic exact enough to compare tightly
            let (a, b) = (a as f64, b as f64);
            let lhs = null_form_q0(jf.scale(a) + jg.scale(b), jh);
            let rhs = a * null_form_q0(jf, jh) + b * null_form_q0(jg, jh);
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
        }

        #[test]
        fn null_round_trip(t in -1e6f64..1e6, x in -1e6f64..1e6) {
            let p = null_coords(SpacetimePoint::new(t, x)).to_point();
            prop_assert!((p.t - t).abs() <= f64::EPSILON * (t.abs() + x.abs()));
            prop_assert!((p.x - x).abs() <= f64::EPSILON * (t.abs() + x.abs()));
        }
    }
}
