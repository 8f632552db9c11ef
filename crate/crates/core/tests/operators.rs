mod common;

use common::{grid_prox, pt, random_point, sphere_nearest_2d};
use proptest::prelude::*;
use sfb::linalg::Matrix;
use sfb::operators::{
    beta_of, resolvent, separable_prox_step, CocoerciveOperator, CocoerciveSpec, ConvexSet,
    ResolventOperator, ScalarPenalty, SeparablePenalty,
};
use sfb::{dot, Point, SeedSpec};

const PAIRS: usize = 10_000;
const SLACK: f64 = 1e-10;

fn catalog_resolvents() -> Vec<ResolventOperator> {
    vec![
        ResolventOperator::zero(),
        ResolventOperator::normal_cone(
            ConvexSet::new_box(vec![-1.0, 0.0, -2.0], vec![1.0, 3.0, -0.5]).unwrap(),
        )
        .unwrap(),
        ResolventOperator::normal_cone(ConvexSet::new_ball(vec![0.5, -1.0, 2.0], 1.5).unwrap())
            .unwrap(),
        ResolventOperator::scaled_identity(0.7).unwrap(),
        ResolventOperator::l1(0.4).unwrap(),
        ResolventOperator::separable(
            SeparablePenalty::new(
                vec![
                    ScalarPenalty::AbsWeighted { weight: 1.2 },
                    ScalarPenalty::IndicatorInterval {
                        lower: -0.5,
                        upper: 2.0,
                    },
                    ScalarPenalty::SquareWeighted { weight: 3.0 },
                ],
                0.8,
            )
            .unwrap(),
        )
        .unwrap(),
    ]
}

fn catalog_cocoercive() -> Vec<CocoerciveOperator> {
    let design = Matrix::from_rows(vec![
        vec![1.0, 0.5, -1.0],
        vec![0.0, 2.0, 0.3],
        vec![-1.5, 0.2, 0.7],
        vec![0.4, -0.6, 1.1],
    ])
    .unwrap();
    vec![
        CocoerciveOperator::identity(3),
        CocoerciveOperator::from_spec(CocoerciveSpec::AffineSpd {
            matrix: Matrix::from_rows(vec![
                vec![2.0, 0.5, 0.0],
                vec![0.5, 1.0, 0.2],
                vec![0.0, 0.2, 0.5],
            ])
            .unwrap(),
            shift: Some(vec![1.0, -1.0, 0.0]),
        })
        .unwrap(),
        CocoerciveOperator::affine_monotone(
            Matrix::from_rows(vec![
                vec![1.0, -2.0, 0.0],
                vec![2.0, 1.0, 0.5],
                vec![0.0, -0.5, 0.3],
            ])
            .unwrap(),
            None,
        )
        .unwrap(),
        CocoerciveOperator::gradient_quadratic(4.0, vec![1.0, 2.0, 3.0]).unwrap(),
        CocoerciveOperator::least_squares(design.clone(), vec![1.0, -1.0, 0.5, 2.0]).unwrap(),
        CocoerciveOperator::from_spec(CocoerciveSpec::GradientLogistic {
            design,
            labels: vec![1.0, -1.0, -1.0, 1.0],
        })
        .unwrap(),
    ]
}

fn sub(a: &Point, b: &Point) -> Point {
    a.axpy(-1.0, b)
}

#[test]
fn catalog_resolvents_are_firmly_nonexpansive() {
    let mut s = SeedSpec::new(11, 0).stream();
    for a in catalog_resolvents() {
        for gamma in [0.1, 1.0, 10.0] {
            for _ in 0..PAIRS {
                let w = random_point(&mut s, 3, 3.0);
                let u = random_point(&mut s, 3, 3.0);
                let jw = resolvent(&a, gamma, &w).unwrap();
                let ju = resolvent(&a, gamma, &u).unwrap();
                let lhs = jw.dist_sq(&ju);
                let rhs = w.dist_sq(&u) - sub(&w, &jw).dist_sq(&sub(&u, &ju));
                assert!(
                    lhs <= rhs + SLACK,
                    "{} gamma={gamma}: {lhs} > {rhs}",
                    a.kind_name()
                );
            }
        }
    }
}

#[test]
fn scaled_identity_satisfies_resolvent_equation() {
    let mut s = SeedSpec::new(12, 0).stream();
    let a = 2.5;
    let op = ResolventOperator::scaled_identity(a).unwrap();
    for gamma in [0.1, 1.0, 10.0] {
        for _ in 0..1000 {
            let z = random_point(&mut s, 4, 5.0);
            let y = resolvent(&op, gamma, &z).unwrap();
            // (z − y)/γ = a·y
            let lhs = sub(&z, &y).scale(1.0 / gamma);
            assert!(lhs.dist(&y.scale(a)) <= 1e-12 * (1.0 + z.norm()));
        }
    }
}

#[test]
fn l1_resolvent_satisfies_sign_conditions() {
    let mut s = SeedSpec::new(13, 0).stream();
    let weight = 0.6;
    let op = ResolventOperator::l1(weight).unwrap();
    for gamma in [0.1, 1.0, 10.0] {
        for _ in 0..1000 {
            let z = random_point(&mut s, 5, 4.0);
            let y = resolvent(&op, gamma, &z).unwrap();
            for (zk, yk) in z.as_slice().iter().zip(y.as_slice()) {
                let g = (zk - yk) / gamma;
                if *yk == 0.0 {
                    assert!(g.abs() <= weight + 1e-12);
                } else {
                    assert!((g - weight * yk.signum()).abs() <= 1e-12);
                }
            }
        }
    }
}

#[test]
fn l1_example_matches_grid_minimization() {
    let y = resolvent(&ResolventOperator::l1(1.0).unwrap(), 1.5, &pt(&[2.0, -0.5])).unwrap();
    let abs = ScalarPenalty::AbsWeighted { weight: 1.0 };
    for (k, z) in [2.0, -0.5].into_iter().enumerate() {
        let reference = grid_prox(&abs, 0.0, 1.5, z);
        assert!((y.as_slice()[k] - reference).abs() < 1e-6);
    }
    assert!((y.as_slice()[0] - 0.5).abs() < 1e-15);
    assert_eq!(y.as_slice()[1], 0.0);
}

#[test]
fn ball_projection_matches_sphere_search() {
    let ball =
        ResolventOperator::normal_cone(ConvexSet::new_ball(vec![0.0, 0.0], 1.0).unwrap()).unwrap();
    let p = ball.project(&pt(&[3.0, 4.0])).unwrap();
    let reference = sphere_nearest_2d([0.0, 0.0], 1.0, [3.0, 4.0]);
    assert!((p.as_slice()[0] - reference[0]).abs() < 1e-6);
    assert!((p.as_slice()[1] - reference[1]).abs() < 1e-6);
    assert!(p.dist(&pt(&[0.6, 0.8])) < 1e-15);

    let mut s = SeedSpec::new(14, 0).stream();
    let c = [0.3, -0.7];
    let off =
        ResolventOperator::normal_cone(ConvexSet::new_ball(c.to_vec(), 0.5).unwrap()).unwrap();
    for _ in 0..20 {
        let z = random_point(&mut s, 2, 3.0);
        if z.dist(&pt(&c)) <= 0.5 {
            continue;
        }
        let p = off.project(&z).unwrap();
        let r = sphere_nearest_2d(c, 0.5, [z.as_slice()[0], z.as_slice()[1]]);
        assert!(p.dist(&pt(&r)) < 1e-6);
    }
}

#[test]
fn box_projection_examples() {
    let b =
        ResolventOperator::normal_cone(ConvexSet::new_box(vec![-1.0; 2], vec![1.0; 2]).unwrap())
            .unwrap();
    assert_eq!(b.project(&pt(&[0.5, -0.2])).unwrap(), pt(&[0.5, -0.2]));
    assert_eq!(b.project(&pt(&[2.0, -3.0])).unwrap(), pt(&[1.0, -1.0]));
    assert!(ConvexSet::new_box(vec![1.0], vec![0.0]).is_err());
}

#[test]
fn least_squares_gradient_matches_finite_differences() {
    let design = Matrix::from_rows(vec![vec![1.0], vec![2.0]]).unwrap();
    let targets = [1.0, 2.0];
    let b = CocoerciveOperator::least_squares(design, targets.to_vec()).unwrap();
    let f = |w: f64| ((w - 1.0).powi(2) + (2.0 * w - 2.0).powi(2)) / 4.0;
    let h = 1e-6;
    let fd = (f(h) - f(-h)) / (2.0 * h);
    let g = b.apply(&pt(&[0.0])).unwrap().as_slice()[0];
    assert!((g - fd).abs() < 1e-8);
    assert!((g + 2.5).abs() < 1e-15);
}

#[test]
fn apply_examples() {
    let q = CocoerciveOperator::gradient_quadratic(1.0, vec![1.0, 1.0]).unwrap();
    assert_eq!(q.apply(&pt(&[1.0, 1.0])).unwrap(), pt(&[0.0, 0.0]));
    let r = CocoerciveOperator::affine_monotone(
        Matrix::from_rows(vec![vec![1.0, -2.0], vec![2.0, 1.0]]).unwrap(),
        None,
    )
    .unwrap();
    assert_eq!(r.apply(&pt(&[1.0, 0.0])).unwrap(), pt(&[1.0, 2.0]));
    assert!(r.apply(&pt(&[1.0])).is_err());
}

#[test]
fn rotation_beta_is_a_over_a2_plus_b2() {
    let (a, b) = (1.0, 2.0);
    let op = CocoerciveOperator::affine_monotone(
        Matrix::from_rows(vec![vec![a, -b], vec![b, a]]).unwrap(),
        None,
    )
    .unwrap();
    let beta = beta_of(&op);
    assert!((beta - a / (a * a + b * b)).abs() < 1e-9);
    let mut s = SeedSpec::new(15, 0).stream();
    for _ in 0..PAIRS {
        let w = random_point(&mut s, 2, 2.0);
        let y = random_point(&mut s, 2, 2.0);
        let d = sub(&op.apply(&w).unwrap(), &op.apply(&y).unwrap());
        assert!(dot(&sub(&w, &y), &d).unwrap() >= beta * d.norm_sq() - SLACK);
    }
    assert_eq!(beta_of(&CocoerciveOperator::identity(2)), 1.0);
    let l4 = CocoerciveOperator::gradient_quadratic(4.0, vec![0.0, 0.0]).unwrap();
    assert_eq!(beta_of(&l4), 0.25);
}

#[test]
fn catalog_operators_are_cocoercive_lipschitz_and_strongly_monotone() {
    let mut s = SeedSpec::new(16, 0).stream();
    for b in catalog_cocoercive() {
        let beta = b.beta();
        let mu = b.mu();
        for _ in 0..PAIRS {
            let w = random_point(&mut s, 3, 3.0);
            let y = random_point(&mut s, 3, 3.0);
            let d = sub(&b.apply(&w).unwrap(), &b.apply(&y).unwrap());
            let inner = dot(&sub(&w, &y), &d).unwrap();
            assert!(
                inner >= beta * d.norm_sq() - SLACK,
                "{} not {beta}-cocoercive",
                b.kind_name()
            );
            assert!(
                d.norm() <= w.dist(&y) / beta + SLACK,
                "{} Lipschitz",
                b.kind_name()
            );
            if mu > 0.0 {
                assert!(
                    inner >= mu * w.dist_sq(&y) - SLACK,
                    "{} not {mu}-strongly monotone",
                    b.kind_name()
                );
            }
        }
    }
}

#[test]
fn separable_prox_examples() {
    let zero = SeparablePenalty::new(vec![ScalarPenalty::Zero; 2], 0.0).unwrap();
    assert_eq!(
        separable_prox_step(&zero, 3.7, &pt(&[1.5, -2.0])).unwrap(),
        pt(&[1.5, -2.0])
    );
    let tik = SeparablePenalty::new(vec![ScalarPenalty::Zero], 1.0).unwrap();
    assert_eq!(
        separable_prox_step(&tik, 1.0, &pt(&[2.0])).unwrap(),
        pt(&[1.0])
    );

    let abs = ScalarPenalty::AbsWeighted { weight: 1.0 };
    let p = SeparablePenalty::new(vec![abs], 1.0).unwrap();
    let y = separable_prox_step(&p, 1.0, &pt(&[3.0]))
        .unwrap()
        .as_slice()[0];
    assert!((y - grid_prox(&abs, 1.0, 1.0, 3.0)).abs() < 1e-6);
    assert!((y - 1.0).abs() < 1e-15);
}

#[test]
fn penalties_are_minimized_at_zero() {
    let mut s = SeedSpec::new(17, 0).stream();
    let penalties = [
        ScalarPenalty::Zero,
        ScalarPenalty::AbsWeighted { weight: 0.3 },
        ScalarPenalty::SquareWeighted { weight: 2.0 },
        ScalarPenalty::IndicatorInterval {
            lower: -1.0,
            upper: 0.5,
        },
    ];
    for phi in penalties {
        assert_eq!(phi.value(0.0), 0.0);
        for _ in 0..1000 {
            assert!(phi.value(3.0 * s.standard_normal()) >= 0.0);
        }
    }
}

fn penalty_strategy() -> impl Strategy<Value = ScalarPenalty> {
    prop_oneof![
        Just(ScalarPenalty::Zero),
        (0.0..3.0f64).prop_map(|weight| ScalarPenalty::AbsWeighted { weight }),
        (0.0..3.0f64).prop_map(|weight| ScalarPenalty::SquareWeighted { weight }),
        (-2.0..0.0f64, 0.0..2.0f64)
            .prop_map(|(lower, upper)| ScalarPenalty::IndicatorInterval { lower, upper }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_is_idempotent_and_nonexpansive(
        z in prop::collection::vec(-10.0..10.0f64, 3),
        u in prop::collection::vec(-10.0..10.0f64, 3),
        radius in 0.1..4.0f64,
    ) {
        let sets = [
            ConvexSet::new_ball(vec![0.5, -0.5, 1.0], radius).unwrap(),
            ConvexSet::new_box(vec![-radius, -1.0, 0.0], vec![radius, 2.0, radius]).unwrap(),
        ];
        let (z, u) = (pt(&z), pt(&u));
        for set in sets {
            let c = ResolventOperator::normal_cone(set).unwrap();
            let pz = c.project(&z).unwrap();
            prop_assert_eq!(c.project(&pz).unwrap(), pz.clone());
            let pu = c.project(&u).unwrap();
            prop_assert!(pz.dist(&pu) <= z.dist(&u) + SLACK);
        }
    }

    #[test]
    fn cauchy_schwarz(a in prop::collection::vec(-1e3..1e3f64, 1..8), seed in any::<u64>()) {
        let mut s = SeedSpec::new(seed, 0).stream();
        let a = pt(&a);
        let b = random_point(&mut s, a.dim(), 100.0);
        let lhs = dot(&a, &b).unwrap().abs();
        prop_assert!(lhs <= a.norm() * b.norm() * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn separable_step_matches_grid_resolvent(
        penalties in prop::collection::vec(penalty_strategy(), 2),
        z in prop::collection::vec(-4.0..4.0f64, 2),
        gamma in 0.05..5.0f64,
        nu in 0.0..2.0f64,
    ) {
        let p = SeparablePenalty::new(penalties.clone(), nu).unwrap();
        let y = separable_prox_step(&p, gamma, &pt(&z)).unwrap();
        let op = ResolventOperator::separable(p).unwrap();
        prop_assert_eq!(resolvent(&op, gamma, &pt(&z)).unwrap(), y.clone());
        for k in 0..2 {
            let r = grid_prox(&penalties[k], nu, gamma, z[k]);
            prop_assert!((y.as_slice()[k] - r).abs() < 1e-6, "k={} got {} want {}", k, y.as_slice()[k], r);
        }
    }
}
