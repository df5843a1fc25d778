use num_complex::Complex64;
use proptest::prelude::*;
use ssabsorb::absorption::AbsorptionLaw;
use ssabsorb::closed_forms::{bessel_survival, sawtooth_survival};
use ssabsorb::levy::{ExpTerm, ExponentHandle, JumpMeasure, LevyModel};
use ssabsorb::models::{self, Bundled};
use ssabsorb::series::{KappaBranch, SeriesEval};
use std::sync::Arc;

fn terms() -> impl Strategy<Value = Vec<ExpTerm>> {
    prop::collection::vec((0.3f64..5.0, 0.1f64..3.0), 1..4)
        .prop_map(|v| v.into_iter().map(|(rate, intensity)| ExpTerm { rate, intensity }).collect())
}

/// Bounded-variation model with drift `b = factor · Σ λ/r`, so the mean is
/// negative for `factor < 1` and positive above.
fn bv_model(factor: std::ops::Range<f64>) -> impl Strategy<Value = LevyModel> {
    (terms(), factor, 0.5f64..2.0).prop_map(|(t, f, alpha)| {
        let b = f * t.iter().map(|x| x.intensity / x.rate).sum::<f64>();
        LevyModel::with_drift(b, 0.0, JumpMeasure::ExpMixture(t), 0.0, alpha).unwrap()
    })
}

fn any_model() -> impl Strategy<Value = LevyModel> {
    (terms(), -3.0f64..3.0, 0.0f64..3.0, 0.5f64..2.0).prop_map(|(t, bbar, sigma, alpha)| {
        LevyModel::new(bbar, sigma, JumpMeasure::ExpMixture(t), 0.0, alpha).unwrap()
    })
}

/// A conservative exponent with `ψ > 0` on `(0, ∞)`.
fn positive_model() -> impl Strategy<Value = LevyModel> {
    prop_oneof![
        bv_model(1.1..4.0),
        (terms(), 0.2f64..3.0, 0.5f64..2.0).prop_map(|(t, sigma, alpha)| {
            let b = 0.1 + t.iter().map(|x| x.intensity / x.rate).sum::<f64>();
            LevyModel::with_drift(b, sigma, JumpMeasure::ExpMixture(t), 0.0, alpha).unwrap()
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exponent_is_convex(m in any_model(), pairs in prop::collection::vec((0.0f64..20.0, 0.0f64..20.0), 100)) {
        let h = ExponentHandle::new(m).unwrap();
        for (a, b) in pairs {
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            let mid = h.psi(0.5 * (u + v));
            prop_assert!(mid <= 0.5 * (h.psi(u) + h.psi(v)) + 1e-10, "u={u} v={v}");
        }
    }

    #[test]
    fn cramer_root_is_a_root(m in bv_model(0.2..0.9)) {
        let h = ExponentHandle::new(m).unwrap();
        let theta = h.cramer_root().unwrap();
        let scale = 1.0 + theta * h.psi_prime(theta).abs();
        prop_assert!(h.psi(theta).abs() <= 1e-12 * scale, "ψ(θ) = {}", h.psi(theta));
    }

    #[test]
    fn inverse_phi_is_increasing_and_inverts(m in any_model()) {
        let h = ExponentHandle::new(m).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for i in 0..30 {
            let q = 10f64.powf(-2.0 + 4.0 * i as f64 / 29.0);
            let p = h.inverse_phi(q).unwrap();
            prop_assert!(p > prev, "φ not increasing at q={q}");
            prop_assert!((h.psi(p) - q).abs() <= 1e-12 * (1.0 + q + p * h.psi_prime(p).abs()));
            prev = p;
        }
    }

    #[test]
    fn tilt_vanishes_at_zero(m in any_model(), g in 0.01f64..5.0) {
        let h = ExponentHandle::new(m).unwrap();
        let t = h.tilt_unchecked(g).unwrap();
        prop_assert_eq!(t.psi(0.0), 0.0);
        prop_assert!((t.psi(1.0) - (h.psi(1.0 + g) - h.psi(g))).abs() <= 1e-11 * (1.0 + h.psi(1.0 + g).abs()));
    }

    #[test]
    fn bv_factorization(m in bv_model(0.2..4.0)) {
        let h = ExponentHandle::new(m).unwrap();
        let b = h.bv_drift().unwrap();
        for i in 0..=500 {
            let u = 0.1 * i as f64;
            if u == 0.0 { continue; }
            let psi = h.psi(u);
            let f = u * (b - h.tail_laplace_vhat(u).unwrap());
            prop_assert!((psi - f).abs() <= 1e-10 * (1.0 + psi.abs()), "u={u}");
        }
    }

    #[test]
    fn coefficient_recurrence(m in positive_model()) {
        let s = SeriesEval::new(Arc::new(ExponentHandle::new(m).unwrap())).unwrap();
        let mut prev = s.log_coeff_a(0).unwrap();
        for n in 1..=500 {
            let cur = s.log_coeff_a(n).unwrap();
            let lhs = cur + s.psi_at(n).unwrap().ln();
            prop_assert!((lhs - prev).abs() <= 1e-14 * prev.abs().max(1.0), "n={n}: {lhs} vs {prev}");
            prev = cur;
        }
    }

    #[test]
    fn entire_in_rho(m in positive_model(), n in 1u32..4) {
        let s = SeriesEval::new(Arc::new(ExponentHandle::new(m).unwrap())).unwrap();
        let rho = -(n as f64);
        let at = s.i_rho(rho, 0.1).unwrap().value;
        for d in [-1e-9, 1e-9] {
            let near = s.i_rho(rho + d, 0.1).unwrap().value;
            prop_assert!((near - at).abs() <= 1e-5, "ρ={rho}{d:+e}: {near} vs {at}");
        }
    }

    #[test]
    fn closed_form_survival_is_a_tail(b in -3.0f64..-0.05, bq in -2.0f64..2.0, q in 0.1f64..3.0,
                                     beta in 0.2f64..3.0, dfrac in 0.05f64..0.95) {
        let delta = 1.0 - beta * (1.0 - dfrac);
        let laws: [Box<dyn Fn(f64) -> f64>; 4] = [
            Box::new(move |t| bessel_survival(b, 0.0, t).unwrap()),
            Box::new(move |t| bessel_survival(bq, q, t).unwrap()),
            Box::new(move |t| sawtooth_survival(beta, delta, 0.0, t).unwrap()),
            Box::new(move |t| sawtooth_survival(beta, 1.0 + dfrac, q, t).unwrap()),
        ];
        for s in &laws {
            prop_assert!((s(1e-6) - 1.0).abs() <= 1e-4, "S(1e-6) = {}", s(1e-6));
            let mut prev = 1.0;
            for i in 0..60 {
                let t = 10f64.powf(-5.0 + 9.0 * i as f64 / 59.0);
                let v = s(t);
                prop_assert!((0.0..=1.0).contains(&v), "S({t}) = {v}");
                prop_assert!(v <= prev + 1e-12, "S increases at t={t}");
                prev = v;
            }
        }
    }
}

const BUNDLED: [Bundled; 3] = [
    Bundled::Sawtooth { beta: 1.0, delta: 0.5, q: 0.0 },
    Bundled::Bessel { b: -0.5, q: 0.0 },
    Bundled::Bessel { b: 0.3, q: 1.0 },
];

#[test]
fn survival_and_distribution_are_monotone() {
    for m in BUNDLED {
        let law = AbsorptionLaw::new(m.model().unwrap()).unwrap();
        let mut prev_s = f64::INFINITY;
        let mut prev_p = f64::NEG_INFINITY;
        for i in 0..200 {
            let t = 10f64.powf(-1.0 + 4.0 * i as f64 / 199.0);
            let s = law.survival_s(t).unwrap().value;
            assert!(s <= prev_s + 1e-12, "{}: S increases at t={t}", m.name());
            prev_s = s;
            let x = 10f64.powf(-1.0 + 2.0 * i as f64 / 199.0);
            let p = law.distribution_p(x).unwrap().value;
            assert!(p >= prev_p - 1e-12, "{}: P decreases at x={x}", m.name());
            prev_p = p;
        }
    }
}

#[test]
fn distribution_is_survival_rescaled() {
    let law = AbsorptionLaw::new(models::bessel(0.3, 1.0).unwrap()).unwrap();
    for x in [0.7, 1.0, 1.9] {
        let p = law.distribution_p(x).unwrap().value;
        assert_eq!(p, law.survival_s(x.powf(-law.alpha())).unwrap().value);
    }
}

#[test]
fn o_is_positive_below_first_zero() {
    for m in BUNDLED {
        let law = AbsorptionLaw::new(m.model().unwrap()).unwrap();
        let s = &law.tilted;
        for a in [0.5, 1.0, 2.0] {
            let kp = s.smallest_kappa_zero(a, KappaBranch::OPlus).unwrap();
            let top = if kp.is_finite() { kp } else { 50.0 };
            // right at the zero the value is below the cancellation floor
            for j in 1..=18 {
                let kappa = top * j as f64 / 20.0;
                for i in 1..=20 {
                    let x = a * i as f64 / 20.0;
                    let o = s.o_rho(kappa, x.powf(s.alpha())).unwrap().value;
                    assert!(o > 0.0, "{}: O({kappa}; {x}^α) = {o}", m.name());
                }
            }
        }
    }
}

#[test]
fn direct_series_and_continuation_agree() {
    let law = AbsorptionLaw::new(models::sawtooth(1.0, 0.5, 0.0).unwrap()).unwrap();
    let s = &law.tilted;
    let r = s.radius();
    for rho in [0.5, 1.5, law.alpha_tilde_gamma] {
        for i in 0..20 {
            let z = Complex64::new(-0.4 * r + 0.8 * r * i as f64 / 19.0, 0.0);
            let rho = Complex64::new(rho, 0.0);
            let d = s.series_i_rho_via(rho, z, ssabsorb::series::Method::DirectSeries).unwrap().value;
            let c = s.series_i_rho_via(rho, z, ssabsorb::series::Method::Continuation).unwrap().value;
            assert!((d - c).norm() <= 1e-9, "ρ={rho} z={z}: {d} vs {c}");
        }
    }
}
