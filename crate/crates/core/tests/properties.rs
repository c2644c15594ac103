mod common;

use mdbt::candidate_sets::{init_set, CandidateSet, SetKind};
use mdbt::hyperplanes::{hyperplane_from_probe, probe_armijo, Halfspace};
use mdbt::objectives::{Objective, OracleCounter};
use mdbt::optimizers::{
    run, run_mb_observed, EventKind, MbStep, Method, PrecondSource, RunConfig, RunStatus,
};
use mdbt::oracle::optimal_diag_precond;
use mdbt::DiagPreconditioner;
use proptest::prelude::*;

use common::{badly_scaled_quadratic, rng};

fn quadratic_case() -> impl Strategy<Value = (u64, usize, f64)> {
    (any::<u64>(), 1usize..=5, 0.0..3.0f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn oracle_counts_match_events((seed, d, log_cond) in quadratic_case(), forward in any::<bool>()) {
        let obj = badly_scaled_quadratic(&mut rng(seed), d, 10f64.powf(log_cond));
        for method in [Method::MbBox, Method::MbEllipsoid, Method::GdLs] {
            let mut cfg = RunConfig::new(method.clone(), d);
            cfg.forward_step = forward;
            cfg.max_oracle_calls = 2_000;
            let t = run(&obj, &vec![1.0; d], &cfg).unwrap();
            let last = t.events.last().unwrap();
            let (acc, rej, fb) = (
                t.count(EventKind::Accept) as u64,
                t.count(EventKind::Reject) as u64,
                t.count(EventKind::FallbackShrink) as u64,
            );
            prop_assert_eq!(last.n_value_evals, 1 + acc + rej + fb);
            let grads = match method {
                Method::GdLs => 1 + acc,
                _ => 1 + acc + rej + fb,
            };
            prop_assert_eq!(last.n_grad_evals, grads);
            prop_assert_eq!(t.count(EventKind::Forward) as u64, if forward { acc } else { 0 });
            prop_assert!(last.total_oracle_calls() <= cfg.max_oracle_calls + 2);
        }
    }

    #[test]
    fn accepted_steps_decrease_f((seed, d, log_cond) in quadratic_case()) {
        let obj = badly_scaled_quadratic(&mut rng(seed), d, 10f64.powf(log_cond));
        for method in [Method::MbBox, Method::MbEllipsoid, Method::GdLs, Method::PrecondLs(PrecondSource::HessianDiag)] {
            let cfg = RunConfig::new(method, d);
            let t = run(&obj, &vec![1.0; d], &cfg).unwrap();
            let mut f = t.events[0].f_value;
            for e in t.events.iter().filter(|e| e.kind == EventKind::Accept) {
                prop_assert!(e.f_value <= f - 0.5 * e.step_sqnorm + 1e-12 * f.abs());
                f = e.f_value;
            }
        }
    }

    #[test]
    fn candidates_stay_in_their_set((seed, d, log_cond) in quadratic_case()) {
        let obj = badly_scaled_quadratic(&mut rng(seed), d, 10f64.powf(log_cond));
        for method in [Method::MbBox, Method::MbEllipsoid] {
            let mut cfg = RunConfig::new(method, d);
            cfg.max_oracle_calls = 1_000;
            let mut bad = 0;
            run_mb_observed(&obj, &vec![1.0; d], &cfg, &mut |s| {
                let (p, set) = match s {
                    MbStep::Accepted { candidate, set, .. } => (candidate, *set),
                    MbStep::Cut { candidate, before, .. } => (candidate, *before),
                    MbStep::Fallback { .. } => return,
                };
                if !set.contains(p.as_slice(), 1e-9) {
                    bad += 1;
                }
            })
            .unwrap();
            prop_assert_eq!(bad, 0);
        }
    }

    #[test]
    fn rejected_candidate_is_cut_off((seed, d, log_cond) in quadratic_case(), scale in 0.0..12.0f64) {
        let obj = badly_scaled_quadratic(&mut rng(seed), d, 10f64.powf(log_cond));
        let x = vec![1.0; d];
        let mut ctr = OracleCounter::default();
        let f = obj.value(&x, &mut ctr).unwrap();
        let g = obj.gradient(&x, &mut ctr).unwrap();
        let p = DiagPreconditioner::uniform(d, 10f64.powf(scale - 6.0)).unwrap();
        let probe = probe_armijo(&obj, &x, f, &g, &p, &mut ctr).unwrap();
        prop_assume!(!probe.accepted());
        let hs = hyperplane_from_probe(&obj, &probe, &p, &mut ctr).unwrap();
        prop_assert!(hs.excludes(p.as_slice()));
        prop_assert_eq!(ctr.n_grad_evals, 2);
        // any valid diagonal survives
        let rep = optimal_diag_precond(obj.matrix(), 1e-8).unwrap();
        prop_assert!(hs.depth(rep.p_star.as_slice()) <= 1.0 + 1e-9);
    }

    #[test]
    fn cuts_contain_the_kept_region(
        a in proptest::collection::vec(1e-3..1e3f64, 2..6),
        dir in proptest::collection::vec(0.0..1.0f64, 6),
        depth in 1.5..20.0f64,
        refine in any::<bool>(),
    ) {
        let d = a.len();
        let dir = &dir[..d];
        let ell: f64 = dir.iter().zip(&a).map(|(u, ai)| u * u / ai).sum();
        prop_assume!(ell > 0.0);
        let u: Vec<f64> = dir.iter().map(|x| x * (2.0 * d as f64 * depth / ell).sqrt()).collect();
        let hs = Halfspace::new(u.clone()).unwrap();
        let e = CandidateSet::Ellipsoid { a: a.clone() };
        let out = e.cut(&hs, refine).unwrap();
        prop_assert!(out.log_volume_drop > 0.0);
        // the vertices where the half-space meets the axes stay inside
        for i in 0..d {
            let on_axis = (1.0 / a[i].sqrt()).min(if u[i] > 0.0 { 1.0 / u[i] } else { f64::INFINITY });
            let mut p = vec![0.0; d];
            p[i] = on_axis;
            prop_assert!(out.new_set.contains(&p, 1e-9));
        }
        let b = CandidateSet::Box { b: a.iter().map(|x| 1.0 / x).collect() };
        if let Ok(out) = b.cut(&hs, false) {
            let CandidateSet::Box { b: nb } = out.new_set else { unreachable!() };
            for (i, bi) in nb.iter().enumerate() {
                prop_assert!(u[i] * bi <= 1.0 + 1e-12);
            }
        }
    }
}

#[test]
fn diverging_gdhd_records_status() {
    let obj = badly_scaled_quadratic(&mut rng(1), 3, 10.0);
    let mut cfg = RunConfig::new(Method::GdHd, 3);
    cfg.baseline.gdhd_alpha0 = 1e3;
    let t = run(&obj, &[1.0; 3], &cfg).unwrap();
    assert_eq!(t.status, Some(RunStatus::Diverged));
}

#[test]
fn init_set_has_c0_on_its_boundary() {
    for kind in [SetKind::Box, SetKind::Ellipsoid, SetKind::Interval] {
        let s = init_set(kind, 4, 3.0).unwrap();
        assert!(s.contains(&[3.0; 4], 1e-12), "{kind:?}");
        assert!(!s.contains(&[3.1; 4], 1e-12), "{kind:?}");
    }
}
