//! Composite Simpson quadrature with panel doubling.

/// Relative change between successive doublings that ends refinement.
pub const RELATIVE_TOLERANCE: f64 = 1e-9;
/// Upper bound on panels per segment.
pub const MAX_PANELS: usize = 1 << 16;
const MIN_PANELS: usize = 8;
/// Absolute floor for segments whose integral is (near) zero.
const ABSOLUTE_FLOOR: f64 = 1e-15;

/// Outcome of a quadrature run.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    /// Total panels used across all segments.
    pub panels: usize,
    /// Richardson estimate `|S_2n - S_n| / 15`, summed over segments.
    pub est_abs_error: f64,
    /// Panels chosen for each segment, in order. Feeding these back to
    /// [`integrate_with_rule`] reproduces the same nodes.
    pub rule: Vec<usize>,
}

fn segments(a: f64, b: f64, breaks: &[f64]) -> Vec<f64> {
    let mut cuts: Vec<f64> = Vec::with_capacity(breaks.len() + 2);
    cuts.push(a);
    cuts.extend(breaks.iter().copied().filter(|&c| c > a && c < b));
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts
}

// Endpoint-smoothing map s -> 3s^2 - 2s^3 on [0, 1]. Its derivative vanishes
// at both ends, which tames integrable derivative singularities (for example
// a Weibull CDF with shape < 1 evaluated at a bound that reaches zero) at the
// segment ends where all such points are placed.
fn smoothed<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> impl Fn(f64) -> f64 + '_ {
    let w = b - a;
    move |s: f64| {
        let phi = s * s * (3.0 - 2.0 * s);
        let dphi = 6.0 * s * (1.0 - s);
        if dphi == 0.0 {
            0.0
        } else {
            f(a + w * phi) * w * dphi
        }
    }
}

/// Integrates `f` over `[a, b]`, splitting at every point of `breaks` that
/// lies strictly inside. Each smooth piece is refined independently by
/// doubling the Simpson panel count until successive estimates agree to
/// [`RELATIVE_TOLERANCE`] or [`MAX_PANELS`] is reached.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64]) -> Quadrature {
    let mut total = Quadrature { value: 0.0, panels: 0, est_abs_error: 0.0, rule: Vec::new() };
    if !(b > a) {
        return total;
    }
    for seg in segments(a, b, breaks).windows(2) {
        let g = smoothed(&f, seg[0], seg[1]);
        let (value, panels, err) = simpson_adaptive(&g, 0.0, 1.0);
        total.value += value;
        total.panels += panels;
        total.est_abs_error += err;
        total.rule.push(panels);
    }
    total
}

/// Same nodes as a previous [`integrate`] call that produced `rule`, with no
/// refinement. The result is a smooth function of any parameter inside `f`,
/// which keeps finite differences free of panel-count jumps.
///
/// Falls back to [`integrate`] if `rule` does not match the segment count.
pub fn integrate_with_rule<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64], rule: &[usize]) -> Quadrature {
    if !(b > a) {
        return Quadrature { value: 0.0, panels: 0, est_abs_error: 0.0, rule: Vec::new() };
    }
    let cuts = segments(a, b, breaks);
    if cuts.len() - 1 != rule.len() {
        return integrate(f, a, b, breaks);
    }
    let mut value = 0.0;
    for (seg, &n) in cuts.windows(2).zip(rule) {
        let g = smoothed(&f, seg[0], seg[1]);
        value += simpson_fixed(&g, 0.0, 1.0, n);
    }
    Quadrature { value, panels: rule.iter().sum(), est_abs_error: f64::NAN, rule: rule.to_vec() }
}

fn simpson_fixed<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let interior: f64 = (1..n).map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
    h / 3.0 * (f(a) + f(b) + interior)
}

fn simpson_adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, usize, f64) {
    let mut n = MIN_PANELS;
    let mut h = (b - a) / n as f64;
    let ends = f(a) + f(b);
    let mut even = 0.0; // interior nodes kept across doublings
    let mut odd: f64 = (0..n / 2).map(|i| f(a + (2 * i + 1) as f64 * h)).sum();
    even += (1..n / 2).map(|i| f(a + (2 * i) as f64 * h)).sum::<f64>();
    let mut prev = h / 3.0 * (ends + 4.0 * odd + 2.0 * even);

    loop {
        // Doubling: all current nodes become even nodes, new midpoints are odd.
        even += odd;
        n *= 2;
        h *= 0.5;
        odd = (0..n / 2).map(|i| f(a + (2 * i + 1) as f64 * h)).sum();
        let cur = h / 3.0 * (ends + 4.0 * odd + 2.0 * even);
        let diff = (cur - prev).abs();
        if diff <= RELATIVE_TOLERANCE * cur.abs() + ABSOLUTE_FLOOR || n >= MAX_PANELS {
            return (cur, n, diff / 15.0);
        }
        prev = cur;
    }
}
