use gigecon_core::foc::{residuals, CandidateState, CoStateWeight};
use gigecon_core::numerics::rel_diff;
use gigecon_core::statics::{analytic_tfp_derivatives, predict_signs, sign_constants, Sector, Sign};
use gigecon_core::steady_state::{check_feasibility, compute_constants, solve, ConsumptionFormula, VariantPolicy};
use gigecon_core::{draw_feasible, EconomyParams, ParamField, SamplerConfig};
use proptest::prelude::*;

fn feasible_params() -> impl Strategy<Value = EconomyParams> {
    (any::<u64>(), 0u64..1_000_000).prop_map(|(seed, i)| draw_feasible(seed, i, &SamplerConfig::default()).unwrap())
}

fn policies() -> impl Strategy<Value = VariantPolicy> {
    prop::sample::select(VariantPolicy::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn validation_is_idempotent(p in feasible_params()) {
        prop_assert_eq!(p.to_raw().validate().unwrap(), p);
    }

    #[test]
    fn m1_scales_with_physical_tfp(p in feasible_params(), scale in 0.5f64..2.0) {
        let mut raw = p.to_raw();
        raw.set(ParamField::Ap, p.tech().a_p * scale);
        let q = raw.validate().unwrap();
        let expected = compute_constants(&p).m1 * scale.powf(1.0 / p.tech().a2);
        prop_assert!(rel_diff(compute_constants(&q).m1, expected, 0.0) < 1e-12);
    }

    #[test]
    fn closed_form_identities(p in feasible_params(), policy in policies()) {
        let k = compute_constants(&p);
        let t = p.tech();
        let ss = solve(&p, policy).unwrap();
        prop_assert!(k.delta > 0.0);
        let lhs = k.p * ss.y_p;
        prop_assert!((lhs + k.m3 * ss.y_d).abs() <= 1e-10 * lhs.abs().max((k.m3 * ss.y_d).abs()));
        prop_assert!(rel_diff(t.a2 * ss.y_p + (t.b2 + k.m2) * ss.y_d, k.m1, 0.0) < 1e-10);
        prop_assert!((ss.h_p + ss.h_d + ss.d - 1.0).abs() <= 4.0 * f64::EPSILON);
        prop_assert!((ss.u_p + ss.u_d - 1.0).abs() <= 4.0 * f64::EPSILON);
        prop_assert!(ss.values().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn capital_conditions_hold_at_closed_form(p in feasible_params()) {
        let ss = solve(&p, VariantPolicy::default()).unwrap();
        let state = CandidateState::from_steady_state(&ss).unwrap();
        let r = residuals(&p, &state, CoStateWeight::B1).relative;
        prop_assert!(r.r_u.abs() < 1e-12, "r_u = {}", r.r_u);
        prop_assert!(r.r_lambda.abs() < 1e-12, "r_lambda = {}", r.r_lambda);
    }

    #[test]
    fn derivative_signs_follow_sign_constants(p in feasible_params()) {
        let sc = sign_constants(&p).unwrap();
        let signs = predict_signs(&sc);
        let ap = analytic_tfp_derivatives(&p, Sector::Physical, ConsumptionFormula::Table).unwrap();
        let ad = analytic_tfp_derivatives(&p, Sector::Gig, ConsumptionFormula::Table).unwrap();
        prop_assert!(ap.d_yp > 0.0 && ap.d_yd < 0.0);
        prop_assert!(ad.d_yp < 0.0 && ad.d_yd > 0.0);
        prop_assert_eq!(Sign::of(ap.d_y), signs.y_wrt_a_p);
        prop_assert_eq!(Sign::of(ap.d_c), signs.c_wrt_a_p);
        prop_assert_eq!(Sign::of(ad.d_y), signs.y_wrt_a_d);
        prop_assert_eq!(Sign::of(ad.d_c), signs.c_wrt_a_d);
    }

    #[test]
    fn feasibility_flips_with_m3(p in feasible_params(), scale in 1e-3f64..1.0) {
        // lowering A_p lowers M1 and raises M3; the report must track the sign of M3
        let mut raw = p.to_raw();
        raw.set(ParamField::Ap, p.tech().a_p * scale);
        let q = raw.validate().unwrap();
        let k = compute_constants(&q);
        let report = check_feasibility(&k, &q);
        prop_assert_eq!(report.is_feasible(), k.m2 - q.tech().b3 > 0.0 && k.m3 <= 0.0);
    }
}
