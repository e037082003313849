use std::f64::consts::PI;

use super::SweepParams;

/// Accumulated drive phase `∫₀ᵗ [ω_bsb^meas − |Ω(t′)|²/(2Δ_total) + Δ₀cos(πt′/T)] dt′`
/// in closed form, valid on `[0, T]`.
///
/// `∫₀ᵗ sin²(πt′/T) dt′ = t/2 − (T/4π)sin(2πt/T)`, so the Stark term carries
/// `(1+2β²)t − (T/2π)sin(2πt/T)`.
pub fn stark_phase(t: f64, sweep: &SweepParams) -> f64 {
    let tt = sweep.duration;
    let stark = sweep.omega0 * sweep.omega0 / (4.0 * sweep.delta_total);
    sweep.omega_bsb_meas * t
        - stark * ((1.0 + 2.0 * sweep.beta * sweep.beta) * t - tt / (2.0 * PI) * (2.0 * PI * t / tt).sin())
        + sweep.delta0 * tt / PI * (PI * t / tt).sin()
}

/// In-phase and quadrature envelopes `(Ω₀sin(πt/T), Ω₀β)` together with the
/// carrier phase from [`stark_phase`].
pub fn drive_quadratures(t: f64, sweep: &SweepParams) -> (f64, f64, f64) {
    (
        sweep.omega0 * (PI * t / sweep.duration).sin(),
        sweep.omega0 * sweep.beta,
        stark_phase(t, sweep),
    )
}

/// Real drive `Ω₀[sin(πt/T)cosΦ − β sinΦ]` with `Φ` the accumulated phase.
/// The quadrature term is the `iβ` component shifted by π/2.
pub fn drive_waveform(t: f64, sweep: &SweepParams) -> f64 {
    let (i, q, phi) = drive_quadratures(t, sweep);
    i * phi.cos() - q * phi.sin()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::sweep_drive;
    use proptest::prelude::*;

    fn integrand(t: f64, s: &SweepParams) -> f64 {
        let x = PI * t / s.duration;
        let mag2 = s.omega0 * s.omega0 * (x.sin().powi(2) + s.beta * s.beta);
        s.omega_bsb_meas - mag2 / (2.0 * s.delta_total) + s.delta0 * x.cos()
    }

    /// Adaptive Simpson quadrature.
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            let delta = left + right - whole;
            if depth == 0 || delta.abs() <= 15.0 * tol {
                return left + right + delta / 15.0;
            }
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
        let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        rec(f, a, b, fa, fm, fb, whole, tol, 40)
    }

    #[test]
    fn endpoint_value() {
        let s = SweepParams::default();
        let expected = s.omega_bsb_meas * s.duration
            - s.omega0 * s.omega0 / (4.0 * s.delta_total) * (1.0 + 2.0 * s.beta * s.beta) * s.duration;
        assert!((stark_phase(s.duration, &s) - expected).abs() <= 1e-12 * expected.abs());
    }

    #[test]
    fn stark_term_drops_without_shift() {
        let mut s = SweepParams::default();
        s.beta = 0.0;
        s.delta_total = f64::INFINITY;
        let t = 0.37 * s.duration;
        let expected = s.omega_bsb_meas * t + s.delta0 * s.duration / PI * (PI * t / s.duration).sin();
        assert!((stark_phase(t, &s) - expected).abs() <= 1e-12 * expected.abs());
    }

    #[test]
    fn closed_form_matches_quadrature_at_third() {
        let s = SweepParams::default();
        let t = s.duration / 3.0;
        let q = simpson(&|x| integrand(x, &s), 0.0, t, 1e-6);
        assert!((stark_phase(t, &s) - q).abs() <= 1e-9 * q.abs());
    }

    #[test]
    fn closed_form_matches_quadrature_without_carrier_frequency() {
        // the large ω_meas·t term would hide errors in the small terms
        let mut s = SweepParams::default();
        s.omega_bsb_meas = 0.0;
        for k in 1..=50 {
            let t = s.duration * k as f64 / 50.0;
            let q = simpson(&|x| integrand(x, &s), 0.0, t, 1e-12);
            assert!((stark_phase(t, &s) - q).abs() <= 1e-9 * q.abs().max(1.0), "t={t}");
        }
    }

    #[test]
    fn waveform_starts_at_zero() {
        assert_eq!(drive_waveform(0.0, &SweepParams::default()), 0.0);
    }

    #[test]
    fn waveform_without_counter_diabatic_term() {
        let mut s = SweepParams::default();
        s.beta = 0.0;
        let t = 0.21 * s.duration;
        let expected = s.omega0 * (PI * t / s.duration).sin() * stark_phase(t, &s).cos();
        assert!((drive_waveform(t, &s) - expected).abs() < 1e-9 * s.omega0);
    }

    #[test]
    fn envelope_matches_coupling_magnitude() {
        let s = SweepParams::default();
        for k in 0..=40 {
            let t = s.duration * k as f64 / 80.0;
            let (i, q, _) = drive_quadratures(t, &s);
            let envelope = (i * i + q * q).sqrt();
            let x = PI * t / s.duration;
            assert!((envelope - s.omega0 * (x.sin().powi(2) + s.beta * s.beta).sqrt()).abs() < 1e-9 * s.omega0);
            assert!((envelope - sweep_drive(t, &s).coupling.norm()).abs() < 1e-9 * s.omega0);
        }
    }

    proptest! {
        #[test]
        fn closed_form_matches_quadrature(frac in 0.0f64..=1.0) {
            let s = SweepParams::default();
            let t = frac * s.duration;
            let q = simpson(&|x| integrand(x, &s), 0.0, t, 1e-6);
            prop_assert!((stark_phase(t, &s) - q).abs() <= 1e-9 * q.abs().max(1.0));
        }
    }
}
