//! One-dimensional maximisation: uniform grid scan plus golden-section refinement.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoldenResult {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Golden-section search for a maximum of `f` on `[lo, hi]`.
///
/// Stops once the bracket is narrower than `tol` or after `max_iter`
/// iterations.
pub fn golden_section_max<F>(mut f: F, lo: f64, hi: f64, tol: f64, max_iter: usize) -> GoldenResult
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iterations = 0;
    while (b - a) > tol && iterations < max_iter {
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
        iterations += 1;
    }
    let (x, fx) = if fc >= fd { (c, fc) } else { (d, fd) };
    GoldenResult { x, fx, iterations, converged: (b - a) <= tol }
}

/// `n` evenly spaced points covering `[lo, hi]`, endpoints included.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
                .collect()
        }
    }
}

/// Index of the largest finite value; earliest index wins ties.
pub fn argmax(values: &[f64]) -> Option<usize> {
    values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .fold(None, |best: Option<(usize, f64)>, (i, &v)| match best {
            Some((_, bv)) if bv >= v => best,
            _ => Some((i, v)),
        })
        .map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn finds_interior_maximum() {
        let r = golden_section_max(|x| -(x - 0.3).powi(2), -1.0, 2.0, 1e-10, 200);
        assert!(r.converged);
        assert_relative_eq!(r.x, 0.3, epsilon = 1e-8);
    }

    #[test]
    fn finds_boundary_maximum() {
        let r = golden_section_max(|x| x, 0.0, 1.0, 1e-12, 200);
        assert!(r.x > 1.0 - 1e-10);
    }

    #[test]
    fn reports_non_convergence() {
        let r = golden_section_max(|x| x.sin(), 0.0, 3.0, 1e-12, 5);
        assert!(!r.converged);
        assert_eq!(r.iterations, 5);
    }

    #[test]
    fn linspace_endpoints() {
        let g = linspace(-1.0, 1.0, 5);
        assert_eq!(g, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(linspace(2.0, 3.0, 1), vec![2.0]);
    }

    #[test]
    fn argmax_skips_nan_and_prefers_first() {
        assert_eq!(argmax(&[1.0, f64::NAN, 3.0, 3.0]), Some(2));
        assert_eq!(argmax(&[f64::NAN]), None);
    }
}
