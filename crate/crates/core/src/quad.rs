//! Quadrature rules: Gauss–Hermite and Gauss–Legendre by Golub–Welsch,
//! adaptive Gauss–Kronrod (7/15), golden-section search.

use nalgebra::{DMatrix, SymmetricEigen};

/// Nodes and weights of a one-dimensional rule.
#[derive(Clone, Debug)]
pub struct Rule1d {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule1d {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

fn golub_welsch(diag: &[f64], off: &[f64], mu0: f64) -> Rule1d {
    let n = diag.len();
    let mut j = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        j[(i, i)] = diag[i];
        if i + 1 < n {
            j[(i, i + 1)] = off[i];
            j[(i + 1, i)] = off[i];
        }
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    // symmetrize: both families below are even
    for i in 0..n / 2 {
        let (xl, wl) = pairs[i];
        let (xr, wr) = pairs[n - 1 - i];
        let x = 0.5 * (xr - xl);
        let w = 0.5 * (wl + wr);
        pairs[i] = (-x, w);
        pairs[n - 1 - i] = (x, w);
    }
    if n % 2 == 1 {
        pairs[n / 2].0 = 0.0;
    }
    Rule1d {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

/// Probabilists' Gauss–Hermite: ∫ f(x) e^{−x²/2} dx ≈ Σ w f(x).
pub fn gauss_hermite_prob(n: usize) -> Rule1d {
    assert!(n >= 1);
    let diag = vec![0.0; n];
    let off: Vec<f64> = (1..n).map(|i| (i as f64).sqrt()).collect();
    golub_welsch(&diag, &off, (2.0 * std::f64::consts::PI).sqrt())
}

/// Rule for ∫ f(x) e^{−(x−c)²/(2σ²)} dx.
pub fn gauss_hermite_scaled(n: usize, center: f64, sigma: f64) -> Rule1d {
    let base = gauss_hermite_prob(n);
    Rule1d {
        nodes: base.nodes.iter().map(|x| center + sigma * x).collect(),
        weights: base.weights.iter().map(|w| w * sigma).collect(),
    }
}

/// Gauss–Legendre on [a, b].
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Rule1d {
    assert!(n >= 1);
    let diag = vec![0.0; n];
    let off: Vec<f64> = (1..n)
        .map(|i| {
            let i = i as f64;
            i / (4.0 * i * i - 1.0).sqrt()
        })
        .collect();
    let base = golub_welsch(&diag, &off, 2.0);
    let h = 0.5 * (b - a);
    let m = 0.5 * (a + b);
    Rule1d {
        nodes: base.nodes.iter().map(|x| m + h * x).collect(),
        weights: base.weights.iter().map(|w| w * h).collect(),
    }
}

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
    0.209_482_141_084_727_8,
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
    let mut rk = WGK[7] * fc;
    let mut rg = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        rk += WGK[j] * s;
        if j % 2 == 1 {
            rg += WG[j / 2] * s;
        }
    }
    (rk * h, ((rk - rg) * h).abs())
}

/// Adaptive Gauss–Kronrod 7/15 on [a, b] with the given break points.
/// Returns (value, error estimate).
pub fn adaptive_gk<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    rel_tol: f64,
    abs_tol: f64,
) -> (f64, f64) {
    if a == b {
        return (0.0, 0.0);
    }
    let mut pts = vec![a];
    let mut inner: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|&x| x > a.min(b) && x < a.max(b))
        .collect();
    inner.sort_by(|x, y| x.partial_cmp(y).unwrap());
    if b < a {
        inner.reverse();
    }
    pts.extend(inner);
    pts.push(b);

    let mut intervals: Vec<(f64, f64, f64, f64)> = Vec::new();
    for w in pts.windows(2) {
        let (v, e) = gk15(&mut f, w[0], w[1]);
        intervals.push((w[0], w[1], v, e));
    }
    for _ in 0..2000 {
        let total: f64 = intervals.iter().map(|iv| iv.2).sum();
        let err: f64 = intervals.iter().map(|iv| iv.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            break;
        }
        let (idx, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.partial_cmp(&y.1 .3).unwrap())
            .unwrap();
        let (lo, hi, _, _) = intervals.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
    intervals.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    (
        intervals.iter().map(|iv| iv.2).sum(),
        intervals.iter().map(|iv| iv.3).sum(),
    )
}

/// Golden-section minimization of a unimodal function on [a, b].
pub fn golden_min<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol * (1.0 + c.abs() + d.abs()) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Natural log of m!.
pub fn ln_factorial(m: u32) -> f64 {
    (1..=m).map(|j| (j as f64).ln()).sum()
}

pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut r = 1.0;
    for j in 0..k {
        r = r * (n - j) as f64 / (j + 1) as f64;
    }
    r.round()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_moments() {
        let r = gauss_hermite_prob(16);
        let s2 = (2.0 * std::f64::consts::PI).sqrt();
        assert!((r.integrate(|_| 1.0) / s2 - 1.0).abs() < 1e-14);
        assert!((r.integrate(|x| x * x) / s2 - 1.0).abs() < 1e-13);
        assert!((r.integrate(|x| x.powi(4)) / s2 - 3.0).abs() < 1e-12);
        assert!((r.integrate(|x| x.powi(30)) / s2 / 6190283353629375.0 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn legendre_exact() {
        let r = gauss_legendre(8, 0.0, 2.0);
        assert!((r.integrate(|x| x.powi(15)) - 2f64.powi(16) / 16.0).abs() < 1e-9);
    }

    #[test]
    fn gk_kink() {
        let (v, _) = adaptive_gk(|x: f64| (x - 0.3).abs().sqrt(), 0.0, 1.0, &[0.3], 1e-12, 0.0);
        let exact = (0.3f64.powf(1.5) + 0.7f64.powf(1.5)) * 2.0 / 3.0;
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn golden() {
        let (x, _) = golden_min(|x| (x - 1.234).powi(2), 0.0, 5.0, 1e-12);
        assert!((x - 1.234).abs() < 1e-7);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(10, 3), 120.0);
        assert_eq!(binomial(5, 0), 1.0);
        assert!((ln_factorial(5) - 120f64.ln()).abs() < 1e-14);
    }
}
