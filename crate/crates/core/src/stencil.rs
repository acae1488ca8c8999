//! Fourth-order finite-difference stencils on uniform grids.
//!
//! Centered in the interior, one-sided at the two outermost nodes on each side.

const D1_LEFT: [[f64; 5]; 2] = [[-25.0, 48.0, -36.0, 16.0, -3.0], [-3.0, -10.0, 18.0, -6.0, 1.0]];
const D2_LEFT: [[f64; 6]; 2] = [
    [45.0, -154.0, 214.0, -156.0, 61.0, -10.0],
    [10.0, -15.0, -4.0, 14.0, -6.0, 1.0],
];

#[inline]
pub fn d1_at(f: &[f64], i: usize, h: f64) -> f64 {
    let n = f.len();
    let s = 1.0 / (12.0 * h);
    if i >= 2 && i + 2 < n {
        return (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) * s;
    }
    if i < 2 {
        let c = &D1_LEFT[i];
        (0..5).map(|k| c[k] * f[k]).sum::<f64>() * s
    } else {
        let c = &D1_LEFT[n - 1 - i];
        -(0..5).map(|k| c[k] * f[n - 1 - k]).sum::<f64>() * s
    }
}

#[inline]
pub fn d2_at(f: &[f64], i: usize, h: f64) -> f64 {
    let n = f.len();
    let s = 1.0 / (12.0 * h * h);
    if i >= 2 && i + 2 < n {
        return (-f[i - 2] + 16.0 * f[i - 1] - 30.0 * f[i] + 16.0 * f[i + 1] - f[i + 2]) * s;
    }
    if i < 2 {
        let c = &D2_LEFT[i];
        (0..6).map(|k| c[k] * f[k]).sum::<f64>() * s
    } else {
        let c = &D2_LEFT[n - 1 - i];
        (0..6).map(|k| c[k] * f[n - 1 - k]).sum::<f64>() * s
    }
}

pub fn d1(f: &[f64], h: f64) -> Vec<f64> {
    (0..f.len()).map(|i| d1_at(f, i, h)).collect()
}

pub fn d2(f: &[f64], h: f64) -> Vec<f64> {
    (0..f.len()).map(|i| d2_at(f, i, h)).collect()
}

/// Cubic Lagrange interpolation of uniformly spaced samples `f` (first node at `x0`).
pub fn interp_cubic(f: &[f64], x0: f64, h: f64, x: f64) -> f64 {
    let n = f.len();
    if n == 1 {
        return f[0];
    }
    let s = (x - x0) / h;
    if n < 4 {
        let i = (s.floor().max(0.0) as usize).min(n - 2);
        let r = s - i as f64;
        return f[i] * (1.0 - r) + f[i + 1] * r;
    }
    let i = (s.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
    let r = s - i as f64;
    let (a, b, c, d) = (f[i], f[i + 1], f[i + 2], f[i + 3]);
    let l0 = -(r - 1.0) * (r - 2.0) * (r - 3.0) / 6.0;
    let l1 = r * (r - 2.0) * (r - 3.0) / 2.0;
    let l2 = -r * (r - 1.0) * (r - 3.0) / 2.0;
    let l3 = r * (r - 1.0) * (r - 2.0) / 6.0;
    a * l0 + b * l1 + c * l2 + d * l3
}
