use convexred::classes::{
    dual_vc_dimension, projection_class, vc_dimension, Classifier, Entry, FiniteConceptClass, Halfspace,
    Majority3Classifier,
};
use convexred::learning::{
    expected_loss, flip_labels, total_variation, zero_one_loss, FiniteDistribution, Hypothesis, Label, LabeledExample,
    LossValue,
};
use convexred::reductions::{
    label_suite, nonconvex_reduction, pushforward, representation_to_reduction, trivial_reduction, verify_reduction,
    VerifyConfig,
};
use convexred::representations::{
    best_halfspace_fit, helly_certify, homogeneous_zero_one, FitOptions, GaussianProjection, Representation,
};
use convexred::rng;
use convexred::sco::{hard_svm, solve_subgradient_traced, HardSvmOutcome, ScoTask, SolverConfig};
use convexred::topology::{partition_of_unity, random_cover_witness, Assignment};
use convexred::vecops::dot;
use convexred::{ConceptClass, Target};
use proptest::prelude::*;
use rand::Rng as _;

fn random_dist(r: &mut rng::Rng, atoms: usize, dim: usize) -> FiniteDistribution {
    let weighted = (0..atoms)
        .map(|_| {
            let x: Vec<f64> = (0..dim).map(|_| r.gen_range(-2..=2) as f64).collect();
            let y = if r.gen_bool(0.5) { Label::Pos } else { Label::Neg };
            (LabeledExample::new(x, y), r.gen_range(0.05..1.0))
        })
        .collect::<Vec<_>>();
    let total: f64 = weighted.iter().map(|(_, w)| w).sum();
    FiniteDistribution::new(weighted.into_iter().map(|(z, w)| (z, w / total)).collect()).unwrap()
}

fn soft_hypothesis() -> Hypothesis {
    Hypothesis::randomized(|x| Ok((0.7 * x[0] - 0.3 * x[1]).tanh()))
}

fn random_class(r: &mut rng::Rng, concepts: usize, points: usize) -> FiniteConceptClass {
    use rand::seq::index::sample;
    let pts = (0..points).map(|j| vec![j as f64]).collect();
    let masks = sample(r, 1 << points, concepts.min(1 << points));
    let table = masks
        .iter()
        .map(|m| {
            (0..points)
                .map(|j| if m >> j & 1 == 1 { Entry::Pos } else { Entry::Neg })
                .collect()
        })
        .collect();
    FiniteConceptClass::new(pts, table, None).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn loss_is_linear_in_the_distribution(seed in any::<u64>(), lambda in 0.01f64..0.99) {
        let mut r = rng::seeded(seed);
        let a = random_dist(&mut r, 6, 2);
        let b = random_dist(&mut r, 5, 2);
        let mix = a.mixture(&b, lambda).unwrap();
        let h = soft_hypothesis();
        let lhs = zero_one_loss(&mix, &h).unwrap();
        let rhs = lambda * zero_one_loss(&a, &h).unwrap() + (1.0 - lambda) * zero_one_loss(&b, &h).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10);

        let hinge = |z: &LabeledExample| LossValue::finite((1.0 - z.label.value() * (z.point[0] - z.point[1])).max(0.0));
        let lhs = expected_loss(&mix, hinge).unwrap().as_f64();
        let rhs = lambda * expected_loss(&a, hinge).unwrap().as_f64()
            + (1.0 - lambda) * expected_loss(&b, hinge).unwrap().as_f64();
        prop_assert!((lhs - rhs).abs() <= 1e-10);
    }

    #[test]
    fn flipping_labels_complements_the_loss(seed in any::<u64>()) {
        let mut r = rng::seeded(seed);
        let d = random_dist(&mut r, 8, 2);
        let c: f64 = r.gen_range(-1.0..=1.0);
        for h in [soft_hypothesis(), Hypothesis::constant(c)] {
            let s = zero_one_loss(&d, &h).unwrap() + zero_one_loss(&flip_labels(&d), &h).unwrap();
            prop_assert!((s - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn opt_is_below_every_concept(seed in any::<u64>()) {
        let mut r = rng::seeded(seed);
        let class = random_class(&mut r, 6, 5);
        let d = random_dist(&mut r, 7, 1);
        let d = d.map_examples(|z| Ok(LabeledExample::new(vec![(z.point[0] + 2.0).min(4.0)], z.label))).unwrap();
        let opt = ConceptClass::Finite(class.clone()).opt(&d).unwrap().value.as_f64();
        for c in 0..class.num_concepts() {
            prop_assert!(opt <= class.concept_loss(c, &d).unwrap());
        }
    }

    #[test]
    fn total_variation_is_a_metric(seed in any::<u64>()) {
        let mut r = rng::seeded(seed);
        let a = random_dist(&mut r, 4, 1);
        let b = random_dist(&mut r, 4, 1);
        let c = random_dist(&mut r, 4, 1);
        prop_assert_eq!(total_variation(&a, &b), total_variation(&b, &a));
        prop_assert!(total_variation(&a, &a) == 0.0);
        prop_assert!(total_variation(&a, &c) <= total_variation(&a, &b) + total_variation(&b, &c) + 1e-12);
    }

    #[test]
    fn vc_dimension_is_at_most_log_of_class_size(seed in any::<u64>(), concepts in 1usize..12, points in 1usize..7) {
        let mut r = rng::seeded(seed);
        let class = random_class(&mut r, concepts, points);
        let vc = vc_dimension(&class).unwrap();
        prop_assert!(1usize << vc <= class.num_concepts());
    }

    #[test]
    fn halfspace_labels_are_scale_invariant(
        w in prop::collection::vec(-5.0f64..5.0, 3),
        x in prop::collection::vec(-5.0f64..5.0, 3),
        lambda in 1e-6f64..1e6,
    ) {
        prop_assume!(w.iter().any(|v| *v != 0.0));
        let h = Halfspace::homogeneous(w.clone()).unwrap();
        let s = Halfspace::homogeneous(w.iter().map(|v| v * lambda).collect()).unwrap();
        prop_assert_eq!(h.evaluate(&x).unwrap(), s.evaluate(&x).unwrap());
    }

    #[test]
    fn some_majority_member_errs_at_most_a_third(seed in any::<u64>()) {
        let mut r = rng::seeded(seed);
        let hs: Vec<Halfspace> = (0..3).map(|_| Halfspace::homogeneous(rng::gaussian_vec(&mut r, 3)).unwrap()).collect();
        let maj = Majority3Classifier::new(hs[0].clone(), hs[1].clone(), hs[2].clone()).unwrap();
        let atoms: Vec<(Vec<f64>, u64)> = (0..10).map(|_| (rng::gaussian_vec(&mut r, 3), r.gen_range(1..20))).collect();
        let total: u64 = atoms.iter().map(|a| a.1).sum();
        // Integer weights keep the comparison exact.
        let mistakes = |h: &Halfspace| -> u64 {
            atoms
                .iter()
                .filter(|(x, _)| h.evaluate(x).unwrap() != maj.evaluate(x).unwrap())
                .map(|a| a.1)
                .sum()
        };
        let best = hs.iter().map(mistakes).min().unwrap();
        prop_assert!(3 * best <= total);
    }

    #[test]
    fn convex_losses_pass_midpoint_and_subgradient_checks(seed in any::<u64>()) {
        let mut r = rng::seeded(seed);
        let examples: Vec<LabeledExample> = random_dist(&mut r, 5, 2).atoms().iter().map(|a| a.example.clone()).collect();
        let hinge = ScoTask::hinge(2);
        let half = ScoTask::half_absolute();
        let lp = ScoTask::linear_programming(2);
        for task in [&hinge, &lp] {
            let check = task.spot_check_convexity(&examples, 1000, 3.0, seed).unwrap();
            prop_assert!(check.worst_violation <= 1e-9);
        }
        let scalars: Vec<LabeledExample> = (0..4)
            .map(|_| LabeledExample::new(vec![], if r.gen_bool(0.5) { Label::Pos } else { Label::Neg }))
            .collect();
        let check = half.spot_check_convexity(&scalars, 1000, 1.0, seed).unwrap();
        prop_assert!(check.worst_violation <= 1e-9);

        for _ in 0..200 {
            let u = rng::gaussian_vec(&mut r, 3);
            let v = rng::gaussian_vec(&mut r, 3);
            for z in &examples {
                let g = hinge.loss.subgradient(z, &u).unwrap();
                let lu = hinge.loss.value(z, &u).unwrap().as_f64();
                let lv = hinge.loss.value(z, &v).unwrap().as_f64();
                let step: f64 = g.iter().zip(v.iter().zip(&u)).map(|(gi, (a, b))| gi * (a - b)).sum();
                prop_assert!(lv >= lu + step - 1e-9);
            }
            let (a, b) = (r.gen_range(-1.0..=1.0), r.gen_range(-1.0..=1.0));
            for z in &scalars {
                let g = half.loss.subgradient(z, &[a]).unwrap();
                let la = half.loss.value(z, &[a]).unwrap().as_f64();
                let lb = half.loss.value(z, &[b]).unwrap().as_f64();
                prop_assert!(lb >= la + g[0] * (b - a) - 1e-9);
            }
        }
    }

    #[test]
    fn best_so_far_loss_never_increases(seed in any::<u64>()) {
        let mut r = rng::seeded(seed);
        let d = random_dist(&mut r, 6, 2);
        let cfg = SolverConfig { max_iters: 2000, norm_cap: Some(4.0), ..SolverConfig::with_alpha(0.05) };
        let (_, trace) = solve_subgradient_traced(&ScoTask::hinge(2), &d, &cfg).unwrap();
        prop_assert!(trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn hard_svm_margins_and_scale_invariance(seed in any::<u64>(), lambda in 1e-3f64..1e3) {
        let mut r = rng::seeded(seed);
        let w = rng::gaussian_vec(&mut r, 2);
        let separable = r.gen_bool(0.5);
        let examples: Vec<LabeledExample> = (0..8)
            .map(|_| {
                let x = rng::gaussian_vec(&mut r, 2);
                let y = if separable { Label::from_sign(dot(&w, &x)) } else if r.gen_bool(0.5) { Label::Pos } else { Label::Neg };
                LabeledExample::new(x, y)
            })
            .collect();
        let d = FiniteDistribution::uniform(examples).unwrap();
        let scaled = d.map_examples(|z| Ok(LabeledExample::new(z.point.iter().map(|v| v * lambda).collect(), z.label))).unwrap();
        let out = hard_svm(&d, true).unwrap();
        prop_assert_eq!(out.is_feasible(), hard_svm(&scaled, true).unwrap().is_feasible());
        if separable {
            prop_assert!(out.is_feasible());
        }
        if let HardSvmOutcome::Feasible(rep) = out {
            let margins: Vec<f64> = d.atoms().iter().map(|a| a.example.label.value() * dot(&rep.point, &a.example.point)).collect();
            prop_assert!(margins.iter().all(|m| *m > 0.0));
            let min = margins.iter().cloned().fold(f64::INFINITY, f64::min);
            prop_assert!((min - 1.0).abs() <= 1e-6);
        }
    }

    #[test]
    fn pushforward_keeps_mass_and_commutes_with_mixtures(seed in any::<u64>(), lambda in 0.01f64..0.99) {
        let mut r = rng::seeded(seed);
        let a = random_dist(&mut r, 6, 2);
        let b = random_dist(&mut r, 6, 2);
        let matrix = vec![rng::gaussian_vec(&mut r, 2), rng::gaussian_vec(&mut r, 2), rng::gaussian_vec(&mut r, 2)];
        let linear = representation_to_reduction(
            &Representation::linear(matrix).unwrap(),
            0.0,
            ConceptClass::Halfspaces { dim: 2, homogeneous: true },
            0.1,
        )
        .unwrap();
        for red in [trivial_reduction(0.01).unwrap(), linear] {
            let pa = pushforward(&red, &a).unwrap();
            prop_assert!((pa.total_mass() - 1.0).abs() <= 1e-12);
            let mixed_first = pushforward(&red, &a.mixture(&b, lambda).unwrap()).unwrap();
            let pushed_first = pa.mixture(&pushforward(&red, &b).unwrap(), lambda).unwrap();
            prop_assert!(total_variation(&mixed_first, &pushed_first) <= 1e-12);
        }
    }

    #[test]
    fn set_distance_losses_sum_to_one(seed in any::<u64>()) {
        let mut r = rng::seeded(seed);
        let n = 5;
        // Concept 0 and 1 disagree everywhere, so every point sees both labels.
        let mut class = vec![vec![Entry::Pos; n], vec![Entry::Neg; n]];
        let extra: Vec<Vec<Entry>> = random_class(&mut r, 8, n).table().iter().filter(|row| !class.contains(row)).take(2).cloned().collect();
        class.extend(extra);
        let class = FiniteConceptClass::new((0..n).map(|j| vec![j as f64]).collect(), class, None).unwrap();
        let params = [0.05, 0.35, 0.6, 0.9];
        let red = nonconvex_reduction(&class, &params, 0.1).unwrap();
        let Target::Sco(task) = &red.target else { panic!("expected an SCO target") };
        for _ in 0..100 {
            let w: f64 = r.gen();
            let j = r.gen_range(0..n) as f64;
            let p = task.loss.value(&LabeledExample::new(vec![j], Label::Pos), &[w]).unwrap().as_f64();
            let q = task.loss.value(&LabeledExample::new(vec![j], Label::Neg), &[w]).unwrap().as_f64();
            prop_assert_eq!(p + q, 1.0);
        }
    }

    #[test]
    fn projection_matrices_depend_only_on_the_seed(seed in any::<u64>(), n in 1usize..6, d in 1usize..20) {
        let p = GaussianProjection::new(n, d).unwrap();
        prop_assert_eq!(p.matrix(seed), p.matrix(seed));
    }

    #[test]
    fn exact_fit_beats_random_directions(seed in any::<u64>()) {
        let mut r = rng::seeded(seed);
        let d = random_dist(&mut r, 7, 2);
        let fit = best_halfspace_fit(&d, &FitOptions::default()).unwrap();
        prop_assert!(fit.exact);
        prop_assert!((homogeneous_zero_one(&d, &fit.w) - fit.loss).abs() <= 1e-12);
        for _ in 0..200 {
            let w = rng::gaussian_vec(&mut r, 2);
            prop_assert!(fit.loss <= homogeneous_zero_one(&d, &w) + 1e-12);
        }
    }
}

#[test]
fn projection_class_dimensions() {
    for (d, vc) in [(1, 0), (2, 1), (4, 2), (8, 3)] {
        let class = projection_class(d).unwrap();
        assert_eq!(vc_dimension(&class).unwrap(), vc, "d = {d}");
    }
    for d in [2, 4, 8] {
        assert_eq!(dual_vc_dimension(&projection_class(d).unwrap()).unwrap(), d);
    }
}

#[test]
fn helly_never_fails_on_exact_representations() {
    let mut r = rng::seeded(11);
    let points: Vec<Vec<f64>> = (0..12).map(|_| rng::gaussian_vec(&mut r, 2)).collect();
    let normals: Vec<Vec<f64>> = (0..6).map(|_| rng::gaussian_vec(&mut r, 2)).collect();
    let mut table: Vec<Vec<Entry>> = Vec::new();
    for w in &normals {
        let row: Vec<Entry> = points.iter().map(|x| Entry::from_label(Label::from_sign(dot(w, x)))).collect();
        if !table.contains(&row) {
            table.push(row);
        }
    }
    let class = FiniteConceptClass::new(points.clone(), table, None).unwrap();
    let samples: Vec<Vec<LabeledExample>> = (0..100)
        .map(|_| {
            let c = r.gen_range(0..normals.len());
            let k = r.gen_range(1..=points.len());
            (0..k)
                .map(|_| {
                    let x = &points[r.gen_range(0..points.len())];
                    LabeledExample::new(x.clone(), Label::from_sign(dot(&normals[c], x)))
                })
                .collect()
        })
        .collect();
    let rep = helly_certify(&Representation::Identity { dim: 2 }, &class, 2, 0.2, &samples).unwrap();
    assert!(rep.exact_on_samples);
    assert!(helly_certify(&Representation::Identity { dim: 2 }, &class, 2, 1.0 / 3.0, &samples).is_err());
}

#[test]
fn partition_weights_are_normalized_and_local() {
    let w = random_cover_witness(2, 0.5, Assignment::Gaussian { k: 2 }, 21).unwrap();
    let mut r = rng::seeded(22);
    for _ in 0..2000 {
        let x = rng::unit_vector(&mut r, 3);
        let rho = partition_of_unity(&w, &x).unwrap();
        assert!((rho.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        for (p, t) in rho.iter().zip(w.centers()) {
            assert!(*p >= 0.0);
            if convexred::vecops::dist(&x, t) >= w.delta() {
                assert_eq!(*p, 0.0);
            }
        }
    }
}

#[test]
fn looser_parameters_keep_passing() {
    let suite = label_suite(16, 9).unwrap();
    let red = trivial_reduction(0.02).unwrap();
    let base = verify_reduction(&red, &suite, &VerifyConfig::default()).unwrap();
    assert!(base.all_pass);
    let tighter = red.with_alpha(0.005).unwrap();
    let cfg = VerifyConfig {
        beta_override: Some(base.beta + 0.05),
        ..VerifyConfig::default()
    };
    assert!(verify_reduction(&tighter, &suite, &cfg).unwrap().all_pass);
}

#[test]
fn verification_is_deterministic() {
    let suite = label_suite(8, 5).unwrap();
    let red = trivial_reduction(0.01).unwrap();
    let cfg = VerifyConfig { seed: 3, ..VerifyConfig::default() };
    let a = verify_reduction(&red, &suite, &cfg).unwrap().to_json().unwrap();
    let b = verify_reduction(&red, &suite, &cfg).unwrap().to_json().unwrap();
    assert_eq!(a, b);
}
