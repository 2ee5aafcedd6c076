//! One-dimensional bracketing searches.

/// Golden-section search for a minimum of `f` on `[a, b]`.
///
/// Stops once the bracket is narrower than `x_tol` (absolute) or after
/// `max_evals` evaluations. Returns `(x_min, f_min)`.
pub fn golden_section_minimize(
    f: impl Fn(f64) -> f64,
    mut a: f64,
    mut b: f64,
    x_tol: f64,
    max_evals: usize,
) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;

    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut evals = 2;

    while evals < max_evals && (b - a).abs() > x_tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
        evals += 1;
    }

    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Smallest `x` in `[lo, hi]` with `pred(x)` true, for a predicate that is
/// monotone (false then true). Returns `hi` if `pred(hi)` is false.
pub fn bisect_threshold(pred: impl Fn(f64) -> bool, mut lo: f64, mut hi: f64, x_tol: f64) -> f64 {
    if pred(lo) {
        return lo;
    }
    if !pred(hi) {
        return hi;
    }
    while hi - lo > x_tol {
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_minimum() {
        let (x, fx) = golden_section_minimize(|x| (x - 1.3).powi(2) + 2.0, -4.0, 5.0, 1e-9, 500);
        // f is flat to rounding within ~sqrt(eps) of the minimum.
        assert!((x - 1.3).abs() < 1e-7);
        assert!((fx - 2.0).abs() < 1e-15);
    }

    #[test]
    fn golden_respects_eval_budget() {
        let count = std::cell::Cell::new(0);
        golden_section_minimize(
            |x| {
                count.set(count.get() + 1);
                x.cos()
            },
            0.0,
            6.0,
            0.0,
            25,
        );
        assert_eq!(count.get(), 25);
    }

    #[test]
    fn bisect_matches_closed_form() {
        let x = bisect_threshold(|x| x.tan() >= 2.0, 0.0, 1.5, 1e-12);
        assert!((x - 2f64.atan()).abs() < 1e-11);
        assert_eq!(bisect_threshold(|x| x > 10.0, 0.0, 1.0, 1e-9), 1.0);
        assert_eq!(bisect_threshold(|_| true, 0.0, 1.0, 1e-9), 0.0);
    }
}
