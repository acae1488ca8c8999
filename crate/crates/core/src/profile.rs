//! One-variable profile families used for initial data and traveling waves.

use serde::{Deserialize, Serialize};

use crate::error::{BzError, Result};
use crate::quadrature;

/// Absolute tolerance for antiderivatives computed by quadrature.
pub const ANTIDERIVATIVE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Zero,
    /// Non-decaying; test scenarios only.
    Constant {
        value: f64,
    },
    /// Non-decaying; test scenarios only.
    Linear {
        slope: f64,
        intercept: f64,
    },
    Gaussian {
        amplitude: f64,
        center: f64,
        width: f64,
    },
    Sech2 {
        amplitude: f64,
        center: f64,
        width: f64,
    },
    /// `amplitude * exp(1 - 1/(1 - r^2))` for `r = (s - center)/radius`, `|r| < 1`.
    Bump {
        amplitude: f64,
        center: f64,
        radius: f64,
    },
    Tabulated(CubicSpline),
    /// `factor * d/ds base`.
    Derivative {
        base: Box<Profile>,
        factor: f64,
    },
}

impl Profile {
    pub fn gaussian(amplitude: f64, center: f64, width: f64) -> Self {
        Profile::Gaussian {
            amplitude,
            center,
            width,
        }
    }

    pub fn value(&self, s: f64) -> f64 {
        self.deriv(s, 0)
    }

    /// Derivative of order `n` (0..=3; `Derivative` and `Tabulated` support 0..=2).
    pub fn deriv(&self, s: f64, n: u32) -> f64 {
        match self {
            Profile::Zero => 0.0,
            Profile::Constant { value } => {
                if n == 0 {
                    *value
                } else {
                    0.0
                }
            }
            Profile::Linear { slope, intercept } => match n {
                0 => slope * s + intercept,
                1 => *slope,
                _ => 0.0,
            },
            Profile::Gaussian {
                amplitude,
                center,
                width,
            } => {
                let z = (s - center) / width;
                let e = amplitude * (-z * z).exp();
                let poly = match n {
                    0 => 1.0,
                    1 => -2.0 * z,
                    2 => 4.0 * z * z - 2.0,
                    3 => -8.0 * z * z * z + 12.0 * z,
                    _ => panic!("profile derivative order {n} unsupported"),
                };
                e * poly / width.powi(n as i32)
            }
            Profile::Sech2 {
                amplitude,
                center,
                width,
            } => {
                let z = (s - center) / width;
                let sc = 1.0 / z.cosh();
                let th = z.tanh();
                let s2 = sc * sc;
                let poly = match n {
                    0 => s2,
                    1 => -2.0 * s2 * th,
                    2 => 4.0 * s2 * th * th - 2.0 * s2 * s2,
                    3 => -8.0 * s2 * th * th * th + 16.0 * s2 * s2 * th,
                    _ => panic!("profile derivative order {n} unsupported"),
                };
                amplitude * poly / width.powi(n as i32)
            }
            Profile::Bump {
                amplitude,
                center,
                radius,
            } => {
                let r = (s - center) / radius;
                if r.abs() >= 1.0 {
                    return 0.0;
                }
                let q = 1.0 - r * r;
                let f = amplitude * (1.0 - 1.0 / q).exp();
                let g1 = -2.0 * r / (radius * q * q);
                let g2 = -2.0 / (radius * radius) * (1.0 / (q * q) + 4.0 * r * r / (q * q * q));
                let g3 = -2.0 / radius.powi(3) * (12.0 * r / q.powi(3) + 24.0 * r.powi(3) / q.powi(4));
                match n {
                    0 => f,
                    1 => f * g1,
                    2 => f * (g2 + g1 * g1),
                    3 => f * (g3 + 3.0 * g1 * g2 + g1 * g1 * g1),
                    _ => panic!("profile derivative order {n} unsupported"),
                }
            }
            Profile::Tabulated(sp) => sp.deriv(s, n),
            Profile::Derivative { base, factor } => factor * base.deriv(s, n + 1),
        }
    }

    /// `integral_0^s profile`.
    pub fn antiderivative(&self, s: f64) -> Result<f64> {
        Ok(match self {
            Profile::Zero => 0.0,
            Profile::Constant { value } => value * s,
            Profile::Linear { slope, intercept } => 0.5 * slope * s * s + intercept * s,
            Profile::Gaussian {
                amplitude,
                center,
                width,
            } => {
                let k = amplitude * width * std::f64::consts::PI.sqrt() * 0.5;
                k * erf_diff((s - center) / width, -center / width)
            }
            Profile::Sech2 {
                amplitude,
                center,
                width,
            } => amplitude * width * (((s - center) / width).tanh() - (-center / width).tanh()),
            Profile::Bump { center, radius, .. } => {
                // integrate only across the support
                let lo = center - radius;
                let hi = center + radius;
                let clamp = |v: f64| v.clamp(lo, hi);
                let (a, b) = (clamp(0.0), clamp(s));
                quadrature::integrate(|y| self.value(y), a, b, ANTIDERIVATIVE_TOL)?
            }
            Profile::Tabulated(sp) => sp.antiderivative(s),
            Profile::Derivative { base, factor } => factor * (base.value(s) - base.value(0.0)),
        })
    }

    /// The profile multiplied by `a`.
    pub fn scaled(&self, a: f64) -> Profile {
        match self {
            Profile::Zero => Profile::Zero,
            Profile::Constant { value } => Profile::Constant { value: a * value },
            Profile::Linear { slope, intercept } => Profile::Linear {
                slope: a * slope,
                intercept: a * intercept,
            },
            Profile::Gaussian {
                amplitude,
                center,
                width,
            } => Profile::Gaussian {
                amplitude: a * amplitude,
                center: *center,
                width: *width,
            },
            Profile::Sech2 {
                amplitude,
                center,
                width,
            } => Profile::Sech2 {
                amplitude: a * amplitude,
                center: *center,
                width: *width,
            },
            Profile::Bump {
                amplitude,
                center,
                radius,
            } => Profile::Bump {
                amplitude: a * amplitude,
                center: *center,
                radius: *radius,
            },
            Profile::Tabulated(sp) => Profile::Tabulated(sp.scaled(a)),
            Profile::Derivative { base, factor } => Profile::Derivative {
                base: base.clone(),
                factor: a * factor,
            },
        }
    }

    pub fn is_test_only(&self) -> bool {
        match self {
            Profile::Constant { value } => *value != 0.0,
            Profile::Linear { .. } => true,
            Profile::Derivative { base, .. } => base.is_test_only(),
            _ => false,
        }
    }

    /// Radius (about 0) outside of which `|profile| <= tol`; `None` when it does not decay.
    pub fn effective_radius(&self, tol: f64) -> Option<f64> {
        match self {
            Profile::Zero => Some(0.0),
            Profile::Constant { value } => (*value == 0.0).then_some(0.0),
            Profile::Linear { .. } => None,
            Profile::Gaussian {
                amplitude,
                center,
                width,
            } => {
                let a = amplitude.abs();
                if a <= tol {
                    return Some(0.0);
                }
                Some(center.abs() + width.abs() * (a / tol).ln().sqrt())
            }
            Profile::Sech2 {
                amplitude,
                center,
                width,
            } => {
                let a = amplitude.abs();
                if a <= tol {
                    return Some(0.0);
                }
                // sech^2 z <= 4 exp(-2|z|)
                Some(center.abs() + width.abs() * 0.5 * (4.0 * a / tol).ln())
            }
            Profile::Bump { center, radius, .. } => Some(center.abs() + radius.abs()),
            Profile::Tabulated(sp) => sp.effective_radius(tol),
            Profile::Derivative { base, factor } => {
                // derivatives of these families decay on the same scale, with margin
                base.effective_radius(tol / (1.0 + factor.abs()) * 1e-2)
            }
        }
    }
}

/// `erf(a) - erf(b)`, switching to complementary functions in the tails.
fn erf_diff(a: f64, b: f64) -> f64 {
    if a > 1.0 && b > 1.0 {
        libm::erfc(b) - libm::erfc(a)
    } else if a < -1.0 && b < -1.0 {
        libm::erfc(-a) - libm::erfc(-b)
    } else {
        libm::erf(a) - libm::erf(b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SplinePoints {
    points: Vec<[f64; 2]>,
}

/// Natural cubic spline through `(s, y)` samples, held constant outside the table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SplinePoints", into = "SplinePoints")]
pub struct CubicSpline {
    s: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
    /// cumulative integral from `s[0]` to each knot
    cum: Vec<f64>,
    zero_offset: f64,
}

impl From<CubicSpline> for SplinePoints {
    fn from(c: CubicSpline) -> Self {
        SplinePoints {
            points: c.s.iter().zip(&c.y).map(|(a, b)| [*a, *b]).collect(),
        }
    }
}

impl TryFrom<SplinePoints> for CubicSpline {
    type Error = BzError;
    fn try_from(p: SplinePoints) -> Result<Self> {
        CubicSpline::new(p.points.iter().map(|v| (v[0], v[1])).collect())
    }
}

impl CubicSpline {
    pub fn new(mut pts: Vec<(f64, f64)>) -> Result<Self> {
        if pts.len() < 4 {
            return Err(BzError::InvalidParameter(
                "tabulated profile needs at least 4 points".into(),
            ));
        }
        if pts.iter().any(|(a, b)| !a.is_finite() || !b.is_finite()) {
            return Err(BzError::InvalidParameter(
                "tabulated profile has non-finite entries".into(),
            ));
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pts.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(BzError::InvalidParameter("tabulated abscissae must be distinct".into()));
        }
        let s: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let n = s.len();
        // tridiagonal solve for second derivatives, natural end conditions
        let mut m = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = s[i] - s[i - 1];
            let h1 = s[i + 1] - s[i];
            let a = h0 / 6.0;
            let b = (h0 + h1) / 3.0;
            let cc = h1 / 6.0;
            let rhs = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
            let denom = b - a * c[i - 1];
            c[i] = cc / denom;
            d[i] = (rhs - a * d[i - 1]) / denom;
        }
        for i in (1..n - 1).rev() {
            m[i] = d[i] - c[i] * m[i + 1];
        }
        let mut sp = CubicSpline {
            s,
            y,
            m,
            cum: vec![0.0; n],
            zero_offset: 0.0,
        };
        for i in 1..n {
            sp.cum[i] = sp.cum[i - 1] + sp.segment_integral(i - 1, sp.s[i]);
        }
        sp.zero_offset = sp.integral_from_start(0.0);
        Ok(sp)
    }

    /// The spline through the same abscissae with ordinates times `a`.
    pub fn scaled(&self, a: f64) -> Self {
        CubicSpline::new(self.s.iter().zip(&self.y).map(|(s, y)| (*s, a * y)).collect())
            .expect("scaling keeps a valid table")
    }

    fn segment(&self, x: f64) -> usize {
        match self.s.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => i.min(self.s.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.s.len() - 2),
        }
    }

    fn deriv(&self, x: f64, n: u32) -> f64 {
        let last = self.s.len() - 1;
        if x < self.s[0] || x > self.s[last] {
            let edge = if x < self.s[0] { self.y[0] } else { self.y[last] };
            return if n == 0 { edge } else { 0.0 };
        }
        let i = self.segment(x);
        let h = self.s[i + 1] - self.s[i];
        let a = (self.s[i + 1] - x) / h;
        let b = (x - self.s[i]) / h;
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        match n {
            0 => a * self.y[i] + b * self.y[i + 1] + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0,
            1 => {
                (self.y[i + 1] - self.y[i]) / h - (3.0 * a * a - 1.0) / 6.0 * h * m0
                    + (3.0 * b * b - 1.0) / 6.0 * h * m1
            }
            2 => a * m0 + b * m1,
            3 => (m1 - m0) / h,
            _ => panic!("spline derivative order {n} unsupported"),
        }
    }

    /// integral over segment `i` from `s[i]` to `x`
    fn segment_integral(&self, i: usize, x: f64) -> f64 {
        let h = self.s[i + 1] - self.s[i];
        let b = (x - self.s[i]) / h;
        let (y0, y1, m0, m1) = (self.y[i], self.y[i + 1], self.m[i], self.m[i + 1]);
        // in terms of b: a = 1 - b
        let int_a = b - 0.5 * b * b;
        let int_b = 0.5 * b * b;
        let int_a3_a = -(1.0 - b).powi(4) / 4.0 + 0.25 - int_a;
        let int_b3_b = b.powi(4) / 4.0 - int_b;
        h * (y0 * int_a + y1 * int_b + (m0 * int_a3_a + m1 * int_b3_b) * h * h / 6.0)
    }

    fn integral_from_start(&self, x: f64) -> f64 {
        let last = self.s.len() - 1;
        if x <= self.s[0] {
            return self.y[0] * (x - self.s[0]);
        }
        if x >= self.s[last] {
            return self.cum[last] + self.y[last] * (x - self.s[last]);
        }
        let i = self.segment(x);
        self.cum[i] + self.segment_integral(i, x)
    }

    fn antiderivative(&self, x: f64) -> f64 {
        self.integral_from_start(x) - self.zero_offset
    }

    fn effective_radius(&self, tol: f64) -> Option<f64> {
        let last = self.s.len() - 1;
        if self.y[0].abs() > tol || self.y[last].abs() > tol {
            return None;
        }
        let mut r: f64 = 0.0;
        for (s, y) in self.s.iter().zip(&self.y) {
            if y.abs() > tol {
                r = r.max(s.abs());
            }
        }
        // spline overshoot is confined to neighbouring segments
        let h = self.s.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        Some(r + 2.0 * h)
    }
}
