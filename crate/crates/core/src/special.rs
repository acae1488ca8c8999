//! Bessel functions `J0`, `J1` for real arguments.
//!
//! Power series below 8, Miller's backward recurrence normalized by
//! `J0 + 2 sum J_2k = 1` on `[8, 25)`, Hankel asymptotics beyond.

const SERIES_LIMIT: f64 = 8.0;
const ASYMPTOTIC_LIMIT: f64 = 25.0;

pub fn j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax < SERIES_LIMIT {
        series(ax, 0)
    } else if ax < ASYMPTOTIC_LIMIT {
        miller(ax).0
    } else {
        hankel(ax, 0)
    }
}

pub fn j1(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax < SERIES_LIMIT {
        series(ax, 1)
    } else if ax < ASYMPTOTIC_LIMIT {
        miller(ax).1
    } else {
        hankel(ax, 1)
    };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

fn series(x: f64, order: u32) -> f64 {
    let q = -0.25 * x * x;
    let (mut term, lead) = if order == 0 { (1.0, 1.0) } else { (1.0, 0.5 * x) };
    let mut sum = term;
    let nu = order as f64;
    for k in 1..200 {
        let k = k as f64;
        term *= q / (k * (k + nu));
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    lead * sum
}

fn miller(x: f64) -> (f64, f64) {
    let mut n = (x as usize) + 40;
    if n % 2 == 1 {
        n += 1;
    }
    let mut jp1 = 0.0;
    let mut j = 1e-300;
    let mut norm = 0.0;
    let mut j0v = 0.0;
    let mut j1v = 0.0;
    for k in (1..=n).rev() {
        let jm1 = 2.0 * k as f64 / x * j - jp1;
        jp1 = j;
        j = jm1;
        let idx = k - 1;
        if idx % 2 == 0 && idx > 0 {
            norm += 2.0 * j;
        }
        if idx == 1 {
            j1v = j;
        }
        if idx == 0 {
            j0v = j;
        }
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp1 *= 1e-250;
            norm *= 1e-250;
            j1v *= 1e-250;
        }
    }
    norm += j0v;
    (j0v / norm, j1v / norm)
}

fn hankel(x: f64, order: u32) -> f64 {
    let mu = 4.0 * (order * order) as f64;
    let z8 = 8.0 * x;
    // P ~ sum (-1)^k a_{2k} / z8^{2k}, Q ~ sum (-1)^k a_{2k+1} / z8^{2k+1}
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let kk = (2 * k - 1) as f64;
        term *= (mu - kk * kk) / (k as f64 * z8);
        if term.abs() > last {
            break;
        }
        last = term.abs();
        // term is a_k / z8^k with the factorial in the denominator
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if term.abs() < 1e-18 {
            break;
        }
    }
    let chi = x - (0.5 * order as f64 + 0.25) * std::f64::consts::PI;
    (2.0 / (std::f64::consts::PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_at_known_points() {
        assert_eq!(j0(0.0), 1.0);
        assert_eq!(j1(0.0), 0.0);
        // first zero of J0
        assert!(j0(2.404_825_557_695_773).abs() < 1e-15);
        assert!((j0(1.0) - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((j1(1.0) - 0.440_050_585_744_933_5).abs() < 1e-15);
    }

    #[test]
    fn agrees_with_libm_on_zero_to_fifty() {
        let mut worst: f64 = 0.0;
        for i in 1..=50_000 {
            let x = i as f64 * 1e-3;
            worst = worst.max((j0(x) - libm::j0(x)).abs());
            worst = worst.max((j1(x) - libm::j1(x)).abs());
        }
        assert!(worst < 1e-12, "worst deviation {worst:e}");
    }

    #[test]
    fn continuous_across_method_switches() {
        // jumps across a switch would show up against the first-order Taylor step
        for &x in &[SERIES_LIMIT, ASYMPTOTIC_LIMIT] {
            let e = 1e-9;
            assert!((j0(x + e) - j0(x - e) + 2.0 * e * j1(x)).abs() < 1e-13);
            let dj1 = j0(x) - j1(x) / x;
            assert!((j1(x + e) - j1(x - e) - 2.0 * e * dj1).abs() < 1e-13);
        }
    }

    #[test]
    fn derivative_identity() {
        // J0' = -J1 by a sixth-order difference
        let h = 1e-2;
        for i in 1..500 {
            let x = 0.1 * i as f64;
            let f = |k: f64| j0(x + k * h);
            let d = (f(3.0) - 9.0 * f(2.0) + 45.0 * f(1.0) - 45.0 * f(-1.0) + 9.0 * f(-2.0) - f(-3.0)) / (60.0 * h);
            assert!((d + j1(x)).abs() < 1e-11, "x={x}");
        }
    }
}
