//! Adaptive Simpson quadrature over panels of bounded width.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 48;
const MAX_PANELS: f64 = (1u64 << 24) as f64;

/// `∫_a^b f` to absolute tolerance `tol`.
///
/// The interval is first cut into equal panels no wider than `max_panel`,
/// then each panel is refined adaptively with a share `tol / panels` of the
/// tolerance. The panel cap keeps sharply peaked or oscillating integrands
/// from being sampled too coarsely on the first pass.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, tol: f64, max_panel: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    if !(max_panel > 0.0) {
        return Err(Error::param("max_panel", "must be positive"));
    }
    if a == b {
        return Ok(0.0);
    }
    let width = b - a;
    let panels = (width.abs() / max_panel).ceil().max(1.0);
    if panels > MAX_PANELS {
        return Err(Error::param(
            "max_panel",
            format!("{panels} panels needed to cover the interval"),
        ));
    }
    let panels = panels as usize;
    let h = width / panels as f64;
    let share = tol / panels as f64;
    let mut total = 0.0;
    let mut left = a;
    let mut f_left = f(left);
    for i in 0..panels {
        let right = if i + 1 == panels { b } else { a + (i + 1) as f64 * h };
        let mid = 0.5 * (left + right);
        let (f_mid, f_right) = (f(mid), f(right));
        let whole = simpson(left, right, f_left, f_mid, f_right);
        total += refine(&f, left, right, f_left, f_mid, f_right, whole, share, MAX_DEPTH);
        left = right;
        f_left = f_right;
    }
    Ok(total)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = adaptive_simpson(|x| x * x * x - 2.0 * x, -1.0, 3.0, 1e-12, 10.0).unwrap();
        assert!((v - 12.0).abs() < 1e-12);
    }

    #[test]
    fn cos_squared_closed_form() {
        let v = adaptive_simpson(|t: f64| t.cos().powi(2), -1.0, 1.0, 1e-10, 0.5).unwrap();
        let exact = 1.0 + (2.0f64).sin() / 2.0;
        assert!((v - exact).abs() < 1e-9);
    }

    #[test]
    fn narrow_peak_needs_panels() {
        // exp(-x²·10⁶) has integral √π·10⁻³ and is invisible to a coarse first pass
        let f = |x: f64| (-x * x * 1e6).exp();
        let exact = std::f64::consts::PI.sqrt() * 1e-3;
        let v = adaptive_simpson(f, -0.5, 0.7, 1e-12, 1e-3).unwrap();
        assert!((v - exact).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(adaptive_simpson(|x| x, 0.0, 1.0, 0.0, 1.0).is_err());
        assert!(adaptive_simpson(|x| x, 0.0, 1.0, 1e-6, 0.0).is_err());
        assert_eq!(adaptive_simpson(|x| x, 2.0, 2.0, 1e-6, 1.0).unwrap(), 0.0);
    }
}
