//! Derivative-free maximisation of unimodal functions on an interval.

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Location and value of a maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub x: f64,
    pub value: f64,
}

/// Grid search over `grid_points` equispaced points of `[lo, hi]`, then
/// golden-section refinement of the bracket around the best grid point until
/// its width drops below `tol`.
pub fn grid_golden_max<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    grid_points: usize,
    tol: f64,
) -> Maximum {
    assert!(hi > lo, "empty search interval");
    let n = grid_points.max(3);
    let h = (hi - lo) / (n - 1) as f64;
    let mut best = Maximum { x: lo, value: f(lo) };
    let mut best_i = 0;
    for i in 1..n {
        let x = if i == n - 1 { hi } else { lo + i as f64 * h };
        let v = f(x);
        // strict comparison keeps the leftmost maximiser on plateaus
        if v > best.value {
            best = Maximum { x, value: v };
            best_i = i;
        }
    }

    let mut a = if best_i == 0 { lo } else { lo + (best_i - 1) as f64 * h };
    let mut b = if best_i + 1 >= n { hi } else { lo + (best_i + 1) as f64 * h };
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a) <= tol {
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
    let (x, v) = if fc >= fd { (c, fc) } else { (d, fd) };
    if v >= best.value {
        Maximum { x, value: v }
    } else {
        best
    }
}
