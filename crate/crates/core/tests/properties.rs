//! Randomized invariants across the public API.

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pimsner::cuntz_pimsner::{Expectation, SpanningElement};
use pimsner::fock::{paths, paths_up_to};
use pimsner::kms::{gamma, invariant_traces, max_kms_residual, Dynamics};
use pimsner::spectral::{pf_data, IndexTable, ResidueSolver};
use pimsner::{catalog, AlgebraElement, FockVector, GraphBimodule, ResidueConfig};

fn named() -> impl Strategy<Value = GraphBimodule> {
    proptest::sample::select(catalog::NAMES).prop_map(|n| catalog::by_name(n).unwrap())
}

/// Strongly connected graphs with a loop at every vertex, hence primitive.
fn primitive_graph() -> impl Strategy<Value = GraphBimodule> {
    (2usize..5)
        .prop_flat_map(|n| (Just(n), proptest::collection::vec(0usize..3, n * n)))
        .prop_map(|(n, counts)| {
            let labels: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
            let mut edges = Vec::new();
            for r in 0..n {
                for s in 0..n {
                    // a loop everywhere and a cycle v0 → v1 → … → v0 keep it primitive
                    let forced = usize::from(r == s) + usize::from(r == (s + 1) % n && r != s);
                    for j in 0..counts[r * n + s].max(forced) {
                        edges.push((format!("e{r}_{s}_{j}"), labels[r].clone(), labels[s].clone()));
                    }
                }
            }
            let edges: Vec<(&str, &str, &str, f64)> =
                edges.iter().map(|(id, r, s)| (id.as_str(), r.as_str(), s.as_str(), 1.0)).collect();
            GraphBimodule::new(labels.clone(), edges).unwrap()
        })
}

fn random_algebra(m: &GraphBimodule, rng: &mut ChaCha8Rng) -> AlgebraElement {
    let vals = (0..m.num_vertices())
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    AlgebraElement::new(m.vertices().clone(), vals).unwrap()
}

fn random_fock(m: &GraphBimodule, n: usize, rng: &mut ChaCha8Rng) -> FockVector {
    FockVector::from_terms(
        paths(m, n)
            .into_iter()
            .map(|p| (p, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))),
    )
}

fn dist(a: &FockVector, b: &FockVector) -> f64 {
    let d = a.sub(b);
    d.terms.values().fold(0.0, |m, z| m.max(z.norm()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn eta_tilde_is_linear(m in named(), n in 0usize..3, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let solver = ResidueSolver::new(&m, ResidueConfig::default()).unwrap();
        let xi = random_fock(&m, n, &mut rng);
        let eta = random_fock(&m, n, &mut rng);
        let c = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let lhs = solver.eta_tilde(&xi.add(&eta.scale(c))).unwrap().eta_tilde;
        let rhs = solver
            .eta_tilde(&xi)
            .unwrap()
            .eta_tilde
            .add(&solver.eta_tilde(&eta).unwrap().eta_tilde.scale(c));
        prop_assert!(dist(&lhs, &rhs) < 1e-12);
    }

    #[test]
    fn expectation_is_a_star_retraction(m in named(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = Expectation::new(&m, ResidueConfig::default(), 3).unwrap();
        let pool = paths_up_to(&m, 2);
        let x = SpanningElement::random(&pool, 4, &mut rng);
        let fx = e.phi_infty(&x).unwrap();
        // onto A, idempotent, and compatible with adjoints
        let again = e.phi_infty(&SpanningElement::from_algebra(&fx)).unwrap();
        prop_assert!(again.distance(&fx).unwrap() < 1e-14);
        let star = e.phi_infty(&x.adjoint()).unwrap();
        prop_assert!(star.distance(&fx.adjoint()).unwrap() < 1e-14);
        // A-bimodule map
        let (a, b) = (random_algebra(&m, &mut rng), random_algebra(&m, &mut rng));
        let axb = SpanningElement::from_algebra(&a).mul(&m, &x).mul(&m, &SpanningElement::from_algebra(&b));
        let want = a.mul(&fx).unwrap().mul(&b).unwrap();
        prop_assert!(e.phi_infty(&axb).unwrap().distance(&want).unwrap() < 1e-12);
    }

    #[test]
    fn spanning_products_are_associative(m in named(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pool = paths_up_to(&m, 2);
        let x = SpanningElement::random(&pool, 3, &mut rng);
        let y = SpanningElement::random(&pool, 3, &mut rng);
        let z = SpanningElement::random(&pool, 3, &mut rng);
        let left = x.mul(&m, &y).mul(&m, &z);
        let right = x.mul(&m, &y.mul(&m, &z));
        prop_assert!(left.distance(&right) < 1e-12);
        let adj = x.mul(&m, &y).adjoint();
        prop_assert!(adj.distance(&y.adjoint().mul(&m, &x.adjoint())) < 1e-12);
    }

    #[test]
    fn gauge_dynamics_is_multiplicative(m in named(), t in -5.0..5.0f64, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pool = paths_up_to(&m, 2);
        let x = SpanningElement::random(&pool, 3, &mut rng);
        let y = SpanningElement::random(&pool, 3, &mut rng);
        let p = Dynamics::Time(t);
        let lhs = gamma(&x.mul(&m, &y), p);
        let rhs = gamma(&x, p).mul(&m, &gamma(&y, p));
        prop_assert!(lhs.distance(&rhs) < 1e-12);
    }

    #[test]
    fn kms_condition_for_every_seed(m in named(), seed in any::<u64>()) {
        if let Ok(traces) = invariant_traces(&m) {
            prop_assert!(traces.canonical.is_invariant(&m, 1e-12));
            prop_assert!(max_kms_residual(&m, &traces.canonical, 20, 3, seed) < 1e-9);
        }
    }

    #[test]
    fn fock_inner_product_is_hermitian_and_positive(m in named(), n in 0usize..3, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xi = random_fock(&m, n, &mut rng);
        let eta = random_fock(&m, n, &mut rng);
        let a = random_algebra(&m, &mut rng);
        let ab = xi.right_inner(&m, &eta).unwrap();
        prop_assert!(eta.right_inner(&m, &xi).unwrap().distance(&ab.adjoint()).unwrap() < 1e-12);
        prop_assert!(xi.right_inner(&m, &xi).unwrap().min_re() >= -1e-14);
        let scaled = xi.right_inner(&m, &eta.right_scale(&a)).unwrap();
        prop_assert!(scaled.distance(&ab.mul(&a).unwrap()).unwrap() < 1e-12);
    }

    #[test]
    fn closed_form_matches_iteration_on_primitive_graphs(m in primitive_graph()) {
        let pf = pf_data(&m, 1e-12, 200).unwrap();
        prop_assert!(pf.primitive);
        let table = IndexTable::new(&m, 400);
        for n in 0..=2 {
            for lam in paths(&m, n) {
                let closed = pf.closed_form_factor(lam.range(), lam.source(), n);
                let direct = table.factor(lam.range(), lam.source(), n, 400);
                prop_assert!((closed - direct).abs() < 1e-8, "{} at n = {n}: {closed} vs {direct}", lam.label(&m));
            }
        }
    }

    #[test]
    fn rate_certificate_bounds_residuals(m in primitive_graph()) {
        let pf = pf_data(&m, 1e-12, 200).unwrap();
        let rate = pf.rate.expect("primitive graphs are certified");
        prop_assert!(rate.alpha < 1.0);
        let b_t = m.adjacency().transpose() / pf.spectral_radius;
        // independent oracle: direct powers for small k, where cancellation is harmless
        let mut power = DMatrix::<f64>::identity(m.num_vertices(), m.num_vertices());
        for k in 0..=8 {
            let direct = (&power - &pf.projection).singular_values().max();
            prop_assert!(direct <= rate.bound(k) * (1.0 + 1e-6) + 1e-9, "k = {k}");
            power = &b_t * power;
        }
        prop_assert!(pf.rate_holds(100));
    }
}
