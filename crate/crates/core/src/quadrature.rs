//! Adaptive Gauss-Kronrod (7/15) integration and composite Simpson rules.

use crate::error::{BzError, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol` by recursive bisection.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut stack = vec![(lo, hi, tol, 0u32)];
    let mut total = 0.0;
    while let Some((a, b, tol, depth)) = stack.pop() {
        let (val, err) = gk15(&mut f, a, b);
        if !val.is_finite() {
            return Err(BzError::QuadratureFailure { a, b });
        }
        if err <= tol || (b - a) <= 1e-13 * (1.0 + a.abs()) {
            if err > tol && err > 1e3 * tol {
                return Err(BzError::QuadratureFailure { a, b });
            }
            total += val;
        } else if depth >= 60 {
            return Err(BzError::QuadratureFailure { a, b });
        } else {
            let m = 0.5 * (a + b);
            stack.push((m, b, 0.5 * tol, depth + 1));
            stack.push((a, m, 0.5 * tol, depth + 1));
        }
    }
    Ok(sign * total)
}

/// Composite Simpson rule on uniformly spaced samples.
///
/// An even number of intervals uses plain Simpson; an odd number ends with a
/// 3/8 panel. Fewer than three samples fall back to the trapezoid rule.
pub fn simpson(y: &[f64], h: f64) -> f64 {
    let n = y.len();
    match n {
        0 | 1 => 0.0,
        2 => 0.5 * h * (y[0] + y[1]),
        3 => h / 3.0 * (y[0] + 4.0 * y[1] + y[2]),
        _ => {
            let intervals = n - 1;
            let simpson_end = if intervals.is_multiple_of(2) { n - 1 } else { n - 4 };
            let mut s = 0.0;
            if simpson_end >= 2 {
                let mut acc = y[0] + y[simpson_end];
                for (i, v) in y.iter().enumerate().take(simpson_end).skip(1) {
                    acc += if i % 2 == 1 { 4.0 } else { 2.0 } * v;
                }
                s += h / 3.0 * acc;
            }
            if simpson_end != n - 1 {
                let k = simpson_end;
                s += 3.0 * h / 8.0 * (y[k] + 3.0 * y[k + 1] + 3.0 * y[k + 2] + y[k + 3]);
            }
            s
        }
    }
}
