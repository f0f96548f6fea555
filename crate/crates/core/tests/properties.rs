//! Randomized invariants of the numerical kernel: the variational
//! characterizations of singular values, metric axioms of the subspace
//! distance, cone duality, and kernel growth under composition. These
//! are the algebraic facts every report in the library leans on, so
//! they get hammered with random inputs rather than hand-picked ones.

use domsplit_core::cone::Cone;
use domsplit_core::linalg::{self, Matrix, Vec4};
use domsplit_core::subspace::{self, Subspace};
use proptest::prelude::*;

/// Random matrix of the given dimension with entries in [−3, 3].
fn matrix_strategy(dim: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-3.0f64..3.0, dim * dim).prop_map(move |entries| {
        let mut m = Matrix::zeros(dim);
        for r in 0..dim {
            for c in 0..dim {
                m.set(r, c, entries[r * dim + c]);
            }
        }
        m
    })
}

/// Random unit vector of the given dimension.
fn unit_strategy(dim: usize) -> impl Strategy<Value = Vec4> {
    prop::collection::vec(-1.0f64..1.0, dim)
        .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-4)
        .prop_map(move |v| {
            let mut out = [0.0; 4];
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            for (i, x) in v.iter().enumerate() {
                out[i] = x / norm;
            }
            out
        })
}

/// Random subspace of the given dimension count inside ambient `dim`.
fn subspace_strategy(dim: usize, sub: usize) -> impl Strategy<Value = Subspace> {
    prop::collection::vec(unit_strategy(dim), sub)
        .prop_map(move |vs| Subspace::from_spanning(dim, &vs, 1e-9))
        .prop_filter("independent span", move |s| s.dim() == sub)
}

fn dim_strategy() -> impl Strategy<Value = usize> {
    2usize..=4
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // ───────────────── singular value decomposition ─────────────────

    #[test]
    fn svd_reconstructs_and_orders((dim, seedless) in dim_strategy().prop_flat_map(|d| (Just(d), matrix_strategy(d)))) {
        let m = seedless;
        let svd = linalg::svd_ascending(&m);
        // Ascending order.
        for i in 1..dim {
            prop_assert!(svd.sigmas[i - 1] <= svd.sigmas[i] + 1e-12);
        }
        // Reconstruction: A·v_i = σ_i·u_i on every singular pair.
        for i in 0..dim {
            let av = m.apply(&svd.domain.col(i));
            let target = svd.codomain.col(i);
            for r in 0..dim {
                prop_assert!((av[r] - svd.sigmas[i] * target[r]).abs() < 1e-9 * (1.0 + m.op_norm()));
            }
        }
    }

    #[test]
    fn operator_norm_and_conorm_are_the_extreme_singular_values(
        (dim, m) in dim_strategy().prop_flat_map(|d| (Just(d), matrix_strategy(d)))
    ) {
        let svd = linalg::svd_ascending(&m);
        prop_assert!((m.op_norm() - svd.sigmas[dim - 1]).abs() < 1e-9 * (1.0 + m.op_norm()));
        prop_assert!((m.conorm() - svd.sigmas[0]).abs() < 1e-9 * (1.0 + m.op_norm()));
    }

    // ───────────────── variational characterizations ─────────────────

    // σ_j is the smallest possible restricted norm over j-dimensional
    // subspaces: any random candidate gives an upper witness, the
    // singular frame attains it.
    #[test]
    fn restricted_norm_of_any_subspace_dominates_the_matching_singular_value(
        (dim, sub, m, s) in dim_strategy()
            .prop_flat_map(|d| (Just(d), 1..=d))
            .prop_flat_map(|(d, k)| (Just(d), Just(k), matrix_strategy(d), subspace_strategy(d, k)))
    ) {
        let _ = dim;
        let svd = linalg::svd_ascending(&m);
        let sigma_k = svd.sigmas[sub - 1];
        let norm_on_s = linalg::norm_restricted(&m, s.basis());
        prop_assert!(norm_on_s >= sigma_k - 1e-9 * (1.0 + m.op_norm()),
            "‖A|S‖ = {norm_on_s} under σ_{sub} = {sigma_k}");
        // The span of the k weakest domain directions attains the bound.
        let frame: Vec<Vec4> = (0..sub).map(|i| svd.domain.col(i)).collect();
        let attained = linalg::norm_restricted(&m, &frame);
        prop_assert!((attained - sigma_k).abs() < 1e-9 * (1.0 + m.op_norm()));
    }

    // Dually, the conorm of any (d−r)-dimensional restriction is capped
    // by σ_{d−r+1}: large subspaces cannot dodge the weak directions.
    #[test]
    fn restricted_conorm_of_a_large_subspace_is_capped(
        (dim, r, m, s) in dim_strategy()
            .prop_flat_map(|d| (Just(d), 0..d))
            .prop_flat_map(|(d, r)| (Just(d), Just(r), matrix_strategy(d), subspace_strategy(d, d - r)))
    ) {
        let svd = linalg::svd_ascending(&m);
        let cap = svd.sigmas[dim - (dim - r) + 0]; // σ_{r+1} in 1-based terms
        let conorm = linalg::conorm_restricted(&m, s.basis());
        prop_assert!(conorm <= cap + 1e-9 * (1.0 + m.op_norm()),
            "m(A|S) = {conorm} over σ = {cap} at dim {}", dim - r);
    }

    // ───────────────── subspace distance is a metric ─────────────────

    #[test]
    fn subspace_distance_metric_axioms(
        (dim, a, b, c) in dim_strategy()
            .prop_flat_map(|d| (Just(d), 1..d))
            .prop_flat_map(|(d, k)| (
                Just(d),
                subspace_strategy(d, k),
                subspace_strategy(d, k),
                subspace_strategy(d, k),
            ))
    ) {
        let _ = dim;
        let dab = subspace::grassmann_distance(&a, &b).unwrap();
        let dba = subspace::grassmann_distance(&b, &a).unwrap();
        let dac = subspace::grassmann_distance(&a, &c).unwrap();
        let dcb = subspace::grassmann_distance(&c, &b).unwrap();
        let daa = subspace::grassmann_distance(&a, &a).unwrap();
        prop_assert!(daa < 1e-9, "self distance {daa}");
        prop_assert!((dab - dba).abs() < 1e-9, "symmetry {dab} vs {dba}");
        prop_assert!(dab <= dac + dcb + 1e-9, "triangle {dab} ≰ {dac} + {dcb}");
        prop_assert!((0.0..=1.0 + 1e-12).contains(&dab));
    }

    #[test]
    fn minimum_angle_vanishes_exactly_on_shared_directions(
        (dim, shared, extra_a, extra_b) in dim_strategy()
            .prop_flat_map(|d| (Just(d), unit_strategy(d), unit_strategy(d), unit_strategy(d)))
    ) {
        // Two planes sharing a direction must have minimum angle 0.
        let a = Subspace::from_spanning(dim, &[shared, extra_a], 1e-9);
        let b = Subspace::from_spanning(dim, &[shared, extra_b], 1e-9);
        prop_assume!(a.dim() == 2 && b.dim() == 2);
        let angle = subspace::angle_between(&a, &b).unwrap();
        prop_assert!(angle < 1e-6, "shared direction but angle {angle}");
    }

    // ───────────────────────── cone duality ─────────────────────────

    #[test]
    fn dual_cone_is_an_involution_and_covers_with_the_primal(
        (dim, axis, probe, eta) in dim_strategy()
            .prop_flat_map(|d| (Just(d), unit_strategy(d), unit_strategy(d), 0.05f64..1.5))
    ) {
        let center = Subspace::line(dim, &axis);
        let cone = Cone::new(center, eta).unwrap();
        let dual = cone.dual();
        let back = dual.dual();
        // Involution: same aperture, same center (distance 0).
        prop_assert!((back.half_angle() - cone.half_angle()).abs() < 1e-12);
        let d0 = subspace::grassmann_distance(back.center(), cone.center()).unwrap();
        prop_assert!(d0 < 1e-9);
        // Coverage: every direction lies in the cone or its dual.
        prop_assert!(cone.contains(&probe) || dual.contains(&probe));
    }

    // ────────────────── kernels under composition ──────────────────

    // dim ker(B·A) ≥ max(dim ker A, dim ker B): composition can only
    // grow the annihilated directions.
    #[test]
    fn composition_kernel_dominates_both_factors(
        (dim, a, b, ka, kb) in dim_strategy()
            .prop_flat_map(|d| (Just(d), matrix_strategy(d), matrix_strategy(d), 0..d, 0..d))
    ) {
        // Surgically deflate ranks: zero out the ka weakest directions
        // of a (resp. kb of b) through their singular frames.
        let deflate = |m: &Matrix, k: usize| {
            let svd = linalg::svd_ascending(m);
            let mut out = Matrix::zeros(dim);
            for i in k..dim {
                let u = svd.codomain.col(i);
                let v = svd.domain.col(i);
                for r in 0..dim {
                    for c in 0..dim {
                        out.set(r, c, out.get(r, c) + svd.sigmas[i] * u[r] * v[c]);
                    }
                }
            }
            out
        };
        let a = deflate(&a, ka);
        let b = deflate(&b, kb);
        // Guard against accidental extra rank loss in the random draw.
        let rank_of = |m: &Matrix| dim - linalg::kernel(m, 1e-7).len();
        prop_assume!(rank_of(&a) == dim - ka && rank_of(&b) == dim - kb);
        let ker_ba = linalg::kernel(&b.mul(&a), 1e-7).len();
        prop_assert!(ker_ba >= ka.max(kb),
            "ker(BA) = {ker_ba} under max({ka}, {kb})");
    }

    // ───────────────── chain SVD against direct products ─────────────────

    #[test]
    fn chain_svd_matches_the_direct_product_on_short_chains(
        (dim, ms) in dim_strategy()
            .prop_flat_map(|d| (Just(d), prop::collection::vec(matrix_strategy(d), 1..=4)))
    ) {
        let svd = linalg::svd_of_chain(&ms);
        let product = linalg::product_chain(&ms).unwrap();
        let direct = linalg::svd_ascending(&product);
        let scale = 1.0 + product.op_norm();
        for i in 0..dim {
            let via_chain = svd.log_sigmas[i].exp();
            prop_assert!((via_chain - direct.sigmas[i]).abs() < 1e-8 * scale,
                "σ_{i}: chain {via_chain} vs direct {}", direct.sigmas[i]);
        }
    }
}
