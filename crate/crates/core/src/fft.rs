//! Real-input FFT convolution of lattice weight vectors.

use realfft::num_complex::Complex;
use realfft::RealFftPlanner;

use crate::budget::ErrorBudget;
use crate::error::{Error, Result};
use crate::lattice::LatticeDist;

/// Below this many multiply-adds the direct sum is used instead of an FFT.
const DIRECT_WORK: usize = 1 << 18;

/// Linear convolution of two nonnegative weight vectors.
///
/// Returns the product together with the total magnitude of negative
/// round-off that was clamped to zero.
pub fn convolve_weights(a: &[f64], b: &[f64]) -> (Vec<f64>, f64) {
    if a.is_empty() || b.is_empty() {
        return (Vec::new(), 0.0);
    }
    if a.len().min(b.len()) <= 32 || a.len() * b.len() <= DIRECT_WORK {
        return (direct(a, b), 0.0);
    }
    let out_len = a.len() + b.len() - 1;
    let size = out_len.next_power_of_two();
    let mut planner = RealFftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(size);
    let inverse = planner.plan_fft_inverse(size);

    let spectrum = |x: &[f64]| -> Vec<Complex<f64>> {
        let mut buf = forward.make_input_vec();
        buf[..x.len()].copy_from_slice(x);
        let mut spec = forward.make_output_vec();
        forward
            .process(&mut buf, &mut spec)
            .expect("buffer sizes come from the plan");
        spec
    };

    let mut spec_a = spectrum(a);
    if std::ptr::eq(a, b) {
        spec_a.iter_mut().for_each(|z| *z = *z * *z);
    } else {
        let spec_b = spectrum(b);
        spec_a.iter_mut().zip(&spec_b).for_each(|(z, w)| *z *= w);
    }
    // the inverse of a real signal has purely real DC and Nyquist bins
    spec_a[0].im = 0.0;
    if let Some(last) = spec_a.last_mut() {
        last.im = 0.0;
    }
    let mut out = inverse.make_output_vec();
    inverse
        .process(&mut spec_a, &mut out)
        .expect("buffer sizes come from the plan");
    out.truncate(out_len);

    let scale = 1.0 / size as f64;
    let mut clamped = 0.0;
    for v in out.iter_mut() {
        *v *= scale;
        if *v < 0.0 {
            clamped -= *v;
            *v = 0.0;
        }
    }
    (out, clamped)
}

fn direct(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (o, &y) in out[i..].iter_mut().zip(b) {
            *o += x * y;
        }
    }
    out
}

/// Convolution of two measures on the same grid step.
pub fn convolve_lattice(a: &LatticeDist, b: &LatticeDist) -> Result<LatticeDist> {
    let step = a.step();
    if (a.step() - b.step()).abs() > 1e-12 * step {
        return Err(Error::param(
            "step",
            format!("lattice steps differ: {} vs {}", a.step(), b.step()),
        ));
    }
    let (weights, clamped) = if std::ptr::eq(a, b) {
        convolve_weights(a.weights(), a.weights())
    } else {
        convolve_weights(a.weights(), b.weights())
    };
    let budget = a.budget()
        + b.budget()
        + ErrorBudget {
            pruned_mass: 0.0,
            fft_residual: clamped,
        };
    Ok(LatticeDist::from_raw(
        a.offset() + b.offset(),
        step,
        weights,
        budget.check()?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fft_matches_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (la, lb) in [(40, 9000), (700, 700), (1500, 333)] {
            let a: Vec<f64> = (0..la).map(|_| rng.gen::<f64>()).collect();
            let b: Vec<f64> = (0..lb).map(|_| rng.gen::<f64>()).collect();
            let (fast, _) = convolve_weights(&a, &b);
            let slow = direct(&a, &b);
            assert_eq!(fast.len(), slow.len());
            let worst = fast
                .iter()
                .zip(&slow)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            assert!(worst < 1e-9, "max deviation {worst}");
        }
    }

    #[test]
    fn squaring_shares_spectrum() {
        let a: Vec<f64> = (0..2000).map(|k| 1.0 / (1.0 + k as f64)).collect();
        let (sq, _) = convolve_weights(&a, &a);
        let copy = a.clone();
        let (prod, _) = convolve_weights(&a, &copy);
        for (x, y) in sq.iter().zip(&prod) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn mismatched_steps_rejected() {
        let a = LatticeDist::new(0.0, 1.0, vec![0.5, 0.5]).unwrap();
        let b = LatticeDist::new(0.0, 2.0, vec![0.5, 0.5]).unwrap();
        assert!(convolve_lattice(&a, &b).is_err());
    }
}
