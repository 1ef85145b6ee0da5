//! Small numerical kit: compensated summation, Gauss-Legendre quadrature,
//! bracketing root finders and golden-section search.

use std::sync::OnceLock;

/// Neumaier-compensated accumulator.
#[derive(Debug, Default, Clone, Copy)]
pub struct Accumulator {
    sum: f64,
    comp: f64,
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut acc = Accumulator::new();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

pub const GAUSS_LEGENDRE_POINTS: usize = 256;

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

// P_n(x) and P_n'(x) by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn rule_256() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(GAUSS_LEGENDRE_POINTS))
}

/// Integrates `f` over [a, b] with the 256-point Gauss-Legendre rule.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let (nodes, weights) = rule_256();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = Accumulator::new();
    for (x, w) in nodes.iter().zip(weights) {
        acc.add(w * f(mid + half * x));
    }
    acc.value() * half
}

const ENDPOINT_LEVELS: i32 = 48;

/// Integrates a quantile-like integrand over [a, b] ⊆ [0, 1]. Subintervals
/// touching 0 or 1 are split geometrically toward the endpoint, where
/// quantile functions of unbounded distributions blow up.
pub fn integrate_unit<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    integrate_unit_dyn(&f, a, b)
}

fn integrate_unit_dyn(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let left = a <= 0.0;
    let right = b >= 1.0;
    match (left, right) {
        (false, false) => integrate(f, a, b),
        (true, true) => integrate_unit_dyn(f, a, 0.5) + integrate_unit_dyn(f, 0.5, b),
        (true, false) => {
            let mut acc = Accumulator::new();
            let width = b - a;
            let mut hi = b;
            for k in 1..=ENDPOINT_LEVELS {
                let lo = a + width * 0.5f64.powi(k);
                acc.add(integrate(f, lo, hi));
                hi = lo;
            }
            acc.value()
        }
        (false, true) => {
            let mut acc = Accumulator::new();
            let width = b - a;
            let mut lo = a;
            for k in 1..=ENDPOINT_LEVELS {
                let hi = b - width * 0.5f64.powi(k);
                // near 1 the grid of doubles is coarse; stop before the cut
                // rounds onto the endpoint itself
                if hi >= b {
                    break;
                }
                acc.add(integrate(f, lo, hi));
                lo = hi;
            }
            acc.value()
        }
    }
}

/// Largest `x` in [lo, hi] with `pred(x)` true, assuming `pred` is true on a
/// prefix of the interval. Returns `lo` if the predicate fails everywhere.
pub fn bisect_boundary<P: Fn(f64) -> bool>(pred: P, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    if pred(hi) {
        return hi;
    }
    for _ in 0..400 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Root of a continuous function with a sign change on [lo, hi].
pub fn bisect_root<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Option<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() {
        return None;
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for a maximum of a unimodal function on [a, b].
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..500 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    // the endpoints of the final bracket can beat its midpoint when the
    // maximum sits on the boundary
    [a, x, b]
        .into_iter()
        .map(|p| (p, f(p)))
        .fold((x, f64::NEG_INFINITY), |best, (p, v)| if v > best.1 { (p, v) } else { best })
        .0
}

/// Maximizes `f` on [a, b]: scans `seeds` evenly spaced points, then refines
/// the best one by golden-section search on its neighbouring bracket.
pub fn seeded_max<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, seeds: usize, tol: f64) -> f64 {
    let seeds = seeds.max(2);
    let step = (b - a) / (seeds - 1) as f64;
    let mut best = (a, f(a));
    for k in 1..seeds {
        let x = if k == seeds - 1 { b } else { a + step * k as f64 };
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    let lo = (best.0 - step).max(a);
    let hi = (best.0 + step).min(b);
    let x = golden_max(&f, lo, hi, tol);
    if f(x) >= best.1 {
        x
    } else {
        best.0
    }
}
