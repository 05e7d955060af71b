//! Randomized invariants of the analysis pipeline, checked with proptest.

use beamnf::dispersion::{classify_divisor, evaluate_divisor, DispersionContext, Divisor};
use beamnf::lattice::{
    analyze_set, check_triv_geometric, integer_sphere, resonant_quadruples, LatticePoint,
};
use beamnf::normal_form::{build_k, mu, NormalFormParams};
use beamnf::random_sets::{estimate_probabilities, sphere_growth, wilson_interval};
use beamnf::spectral::{analyze_spectrum, block_spectrum, certificates, multiset_distance};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use std::collections::{BTreeMap, BTreeSet};

fn pt(coords: &[i64]) -> LatticePoint {
    LatticePoint::new(coords.to_vec())
}

/// Distinct lattice points with coordinates in [-4, 4].
fn point_set(d: usize, n: usize) -> impl Strategy<Value = Vec<LatticePoint>> {
    prop::collection::btree_set(prop::collection::vec(-4i64..=4, d), n)
        .prop_map(|set| set.into_iter().map(LatticePoint::new).collect())
}

fn planar_example() -> Vec<LatticePoint> {
    vec![pt(&[0, 1]), pt(&[1, -1])]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ell_targets_the_unique_excited_point_on_each_sphere(
        points in point_set(2, 3),
    ) {
        let analysis = analyze_set(2, &points).unwrap();
        prop_assume!(analysis.admissible);
        for s in &analysis.lambda_f {
            let sphere = integer_sphere(2, s.norm2());
            let excited_on_sphere: Vec<_> = sphere
                .iter()
                .filter(|x| analysis.points.contains(x))
                .collect();
            prop_assert_eq!(excited_on_sphere.len(), 1);
            let idx = analysis.ell[s];
            prop_assert_eq!(excited_on_sphere[0], &analysis.points[idx]);
        }
    }

    #[test]
    fn pair_sets_are_swap_symmetric(points in point_set(2, 3)) {
        let analysis = analyze_set(2, &points).unwrap();
        prop_assume!(analysis.admissible);
        let sites: Vec<_> = analysis.lambda_f.iter().cloned().collect();
        for x in &sites {
            for y in &sites {
                prop_assert_eq!(
                    analysis.is_plus_pair(x, y),
                    analysis.is_plus_pair(y, x)
                );
                prop_assert_eq!(
                    analysis.is_minus_pair(x, y),
                    analysis.is_minus_pair(y, x)
                );
            }
        }
    }

    #[test]
    fn classes_are_the_connected_components_of_the_coupling_graph(
        points in point_set(2, 3),
    ) {
        let analysis = analyze_set(2, &points).unwrap();
        prop_assume!(analysis.admissible);
        // Union-find closure of the pair relation, then compare partitions;
        // equality of the two means the class relation is transitive.
        let sites: Vec<LatticePoint> = analysis.lambda_f.iter().cloned().collect();
        let index: BTreeMap<&LatticePoint, usize> =
            sites.iter().enumerate().map(|(i, s)| (s, i)).collect();
        let mut parent: Vec<usize> = (0..sites.len()).collect();
        fn find(parent: &mut Vec<usize>, i: usize) -> usize {
            if parent[i] != i {
                let r = find(parent, parent[i]);
                parent[i] = r;
            }
            parent[i]
        }
        for x in &sites {
            for y in &sites {
                if analysis.is_plus_pair(x, y) || analysis.is_minus_pair(x, y) {
                    let (a, b) = (find(&mut parent, index[x]), find(&mut parent, index[y]));
                    parent[a] = b;
                }
            }
        }
        let mut components: BTreeMap<usize, BTreeSet<LatticePoint>> = BTreeMap::new();
        for (i, s) in sites.iter().enumerate() {
            components
                .entry(find(&mut parent, i))
                .or_default()
                .insert(s.clone());
        }
        let closure: BTreeSet<BTreeSet<LatticePoint>> = components.into_values().collect();
        let reported: BTreeSet<BTreeSet<LatticePoint>> = analysis
            .classes
            .iter()
            .map(|c| c.members.iter().cloned().collect())
            .collect();
        prop_assert_eq!(closure, reported);
    }

    #[test]
    fn low_dimensions_admissible_implies_strongly(
        line in point_set(1, 3),
        plane in point_set(2, 3),
    ) {
        for (d, points) in [(1usize, line), (2usize, plane)] {
            let analysis = analyze_set(d, &points).unwrap();
            if analysis.admissible {
                prop_assert!(analysis.strongly_admissible);
            }
        }
    }

    #[test]
    fn no_admissible_set_carries_a_three_excited_quadruple(
        points in point_set(2, 3),
    ) {
        let analysis = analyze_set(2, &points).unwrap();
        prop_assume!(analysis.admissible);
        let cutoff = analysis
            .points
            .iter()
            .chain(analysis.lambda_f.iter())
            .map(|p| p.sup_norm())
            .max()
            .unwrap();
        let quads = resonant_quadruples(&analysis, cutoff).unwrap();
        prop_assert!(quads.count3.is_empty());
    }

    #[test]
    fn sphere_enumeration_matches_the_census(
        d in 1usize..=4,
        r2 in 0i128..=120,
    ) {
        let census = sphere_growth(d, r2);
        prop_assert_eq!(
            integer_sphere(d, r2).len() as u64,
            census[r2 as usize]
        );
    }

    #[test]
    fn frequency_bounds_pinch_every_nonzero_norm(
        r2 in 1i128..=2500,
        m in 1.0f64..=2.0,
    ) {
        let ctx = DispersionContext::new(2, m).unwrap();
        let lam = ctx.lambda_of_norm2(r2);
        let base = r2 as f64;
        prop_assert!(base < lam);
        prop_assert!(lam < base + m / (2.0 * base));
    }

    #[test]
    fn frequency_mass_derivative_matches_finite_differences(
        c in 1i64..=20,
        m in 1.05f64..=1.95,
    ) {
        let a = LatticePoint::new(vec![c]);
        let ctx = DispersionContext::new(1, m).unwrap();
        let h = 1e-5;
        let up = DispersionContext::new(1, m + h).unwrap();
        let dn = DispersionContext::new(1, m - h).unwrap();
        let fd = (up.lambda(&a) - dn.lambda(&a)) / (2.0 * h);
        let analytic = ctx.lambda_m_derivative(&a, 1);
        prop_assert!((fd - analytic).abs() <= 1e-6 * analytic.abs().max(1.0));
    }

    #[test]
    fn classifier_is_invariant_under_relabelling(
        points in point_set(2, 3),
        k in prop::collection::vec(-3i64..=3, 3),
        perm_seed in any::<u64>(),
    ) {
        let analysis = analyze_set(2, &points).unwrap();
        prop_assume!(analysis.admissible);
        prop_assume!(!analysis.lambda_f.is_empty());
        let a = analysis.lambda_f.iter().next().unwrap().clone();
        let b = analysis.lambda_f.iter().last().unwrap().clone();
        let div = Divisor::d2(k.clone(), a.clone(), b.clone(), true);

        // The analysis canonicalizes point order, so shuffling the input
        // list must produce the identical analysis and verdict.
        let mut shuffled = points.clone();
        let mut rng = ChaCha12Rng::seed_from_u64(perm_seed);
        shuffled.shuffle(&mut rng);
        let analysis2 = analyze_set(2, &shuffled).unwrap();
        prop_assert_eq!(&analysis.points, &analysis2.points);

        // Swapping each external site for any same-norm site relabels the
        // formal symbols consistently: verdict and value are unchanged.
        let swap = |p: &LatticePoint| {
            integer_sphere(2, p.norm2())
                .into_iter()
                .rev()
                .find(|x| !analysis.points.contains(x))
                .unwrap()
        };
        let div2 = Divisor::d2(k, swap(&a), swap(&b), true);
        prop_assert_eq!(
            classify_divisor(&analysis, &div).unwrap(),
            classify_divisor(&analysis2, &div2).unwrap()
        );
        let ctx = DispersionContext::new(2, 1.37).unwrap();
        let v1 = evaluate_divisor(&ctx, &analysis, &div).unwrap();
        let v2 = evaluate_divisor(&ctx, &analysis2, &div2).unwrap();
        prop_assert_eq!(v1, v2);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn k_matrix_is_symmetric_with_no_cross_class_coupling(
        r1 in 0.01f64..=1.0,
        r2 in 0.01f64..=1.0,
        m in 1.0f64..=2.0,
    ) {
        let analysis = analyze_set(2, &planar_example()).unwrap();
        let ctx = DispersionContext::new(2, m).unwrap();
        let params = NormalFormParams::new(ctx, analysis, vec![r1, r2], 1e-3).unwrap();
        let kdata = build_k(&params).unwrap();
        let k = &kdata.complex_full;
        let mut class_of_mode: Vec<usize> = Vec::new();
        for block in &kdata.blocks {
            for _ in 0..block.modes() {
                class_of_mode.push(block.class_index);
            }
        }
        for i in 0..k.nrows() {
            for j in 0..k.ncols() {
                prop_assert_eq!(k[(i, j)], k[(j, i)]);
                if class_of_mode[i / 2] != class_of_mode[j / 2] {
                    prop_assert_eq!(k[(i, j)].norm(), 0.0);
                }
            }
        }
        // Uniform boundedness over the sampled amplitude range.
        prop_assert!(beamnf::spectral::op_norm(k) <= 1.0);
    }

    #[test]
    fn mu_depends_on_a_site_only_through_its_norm(
        r1 in 0.01f64..=1.0,
        r2 in 0.01f64..=1.0,
    ) {
        let analysis = analyze_set(2, &planar_example()).unwrap();
        let ctx = DispersionContext::new(2, 1.0).unwrap();
        let params = NormalFormParams::new(ctx, analysis, vec![r1, r2], 1e-3).unwrap();
        for (x, y) in [
            (pt(&[0, -1]), pt(&[1, 0])),
            (pt(&[0, -1]), pt(&[-1, 0])),
            (pt(&[1, 1]), pt(&[-1, 1])),
        ] {
            prop_assert_eq!(
                mu(&params, &x).unwrap(),
                mu(&params, &y).unwrap()
            );
        }
    }

    #[test]
    fn block_spectra_are_closed_under_negation_and_conjugation(
        r1 in 0.05f64..=1.0,
        r2 in 0.05f64..=1.0,
    ) {
        let analysis = analyze_set(2, &planar_example()).unwrap();
        let ctx = DispersionContext::new(2, 1.0).unwrap();
        let params = NormalFormParams::new(ctx, analysis, vec![r1, r2], 1e-3).unwrap();
        let kdata = build_k(&params).unwrap();
        for block in &kdata.blocks {
            let spec = block_spectrum(block).unwrap();
            let scale = spec
                .eigenvalues
                .iter()
                .map(|z| z.norm())
                .fold(0.0f64, f64::max)
                .max(1e-300);
            let negated: Vec<_> = spec.eigenvalues.iter().map(|z| -z).collect();
            let conjugated: Vec<_> = spec.eigenvalues.iter().map(|z| z.conj()).collect();
            prop_assert!(multiset_distance(&spec.eigenvalues, &negated) <= 1e-10 * scale);
            prop_assert!(multiset_distance(&spec.eigenvalues, &conjugated) <= 1e-10 * scale);
        }
    }

}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn type_partition_is_constant_along_certified_paths(
        s1 in 0.1f64..=1.0,
        s2 in 0.1f64..=1.0,
        e1 in 0.1f64..=1.0,
        e2 in 0.1f64..=1.0,
    ) {
        let ends = ([s1, s2], [e1, e2]);
        if let Some(tags) = certified_path_tags(&ends.0, &ends.1, 11) {
            for w in tags.windows(2) {
                prop_assert_eq!(&w[0], &w[1]);
            }
        }
        // Paths whose certificate dips toward zero pass vacuously: a type
        // change is only forbidden while the certificate stays away from 0.
    }
}

/// Sampled type tags along the straight amplitude path, or None when the
/// certificate fails: the product P·D·M must stay nonzero with constant
/// sign. (A transversal type change drives the discriminant factor of D
/// through zero and flips its sign; the product's absolute size is no
/// guide, since it scales like a high power of the amplitudes.)
fn certified_path_tags(start: &[f64], end: &[f64], steps: usize) -> Option<Vec<Vec<String>>> {
    let analysis = analyze_set(2, &planar_example()).unwrap();
    let ctx = DispersionContext::new(2, 1.0).unwrap();
    let mut tags_along_path = Vec::new();
    let mut products = Vec::new();
    for step in 0..=steps {
        let t = step as f64 / steps as f64;
        let rho: Vec<f64> = start
            .iter()
            .zip(end.iter())
            .map(|(s, e)| (1.0 - t) * s + t * e)
            .collect();
        let params = NormalFormParams::new(ctx, analysis.clone(), rho, 1e-3).unwrap();
        let cert = certificates(&params).unwrap();
        // Factors are kept separate: their magnitudes sit near 1e-30..1e-260
        // (long products of small eigenvalues), so the literal triple
        // product underflows to zero even when every factor is healthy.
        products.push([cert.p, cert.d, cert.m]);
        let report = analyze_spectrum(&params).unwrap();
        let mut tags: Vec<String> = report
            .blocks
            .iter()
            .flat_map(|b| b.pairs.iter().map(|p| format!("{:?}", p.mode_type)))
            .collect();
        tags.sort();
        tags_along_path.push(tags);
    }
    let certified = (0..3).all(|f| {
        products
            .iter()
            .all(|row| row[f] != 0.0 && row[f].signum() == products[0][f].signum())
    });
    if certified {
        Some(tags_along_path)
    } else {
        None
    }
}

#[test]
fn type_partition_is_constant_on_reference_paths() {
    // A path inside the hyperbolic component and one inside the elliptic
    // component; both must certify and keep their type tags.
    let hyper = certified_path_tags(&[0.25, 0.25], &[1.0, 1.0], 20)
        .expect("diagonal path should stay certified");
    assert!(hyper[0].contains(&"ComplexQuadruple".to_string()));
    for w in hyper.windows(2) {
        assert_eq!(w[0], w[1]);
    }
    let elliptic = certified_path_tags(&[0.05, 0.6], &[0.05, 0.95], 20)
        .expect("near-corner path should stay certified");
    assert!(elliptic[0].iter().all(|t| t == "Elliptic"));
    for w in elliptic.windows(2) {
        assert_eq!(w[0], w[1]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn coupled_pairs_with_equal_first_norms_separate_in_the_second(
        points in point_set(2, 3),
    ) {
        let analysis = analyze_set(2, &points).unwrap();
        prop_assume!(analysis.strongly_admissible);
        let pairs: Vec<_> = analysis
            .plus_pairs
            .iter()
            .chain(analysis.minus_pairs.iter())
            .cloned()
            .collect();
        for (a, a2) in &pairs {
            for (b, b2) in &pairs {
                if a.norm2() == b.norm2() && a != b {
                    let same_sig = (analysis.is_plus_pair(a, a2)
                        && analysis.is_plus_pair(b, b2))
                        || (analysis.is_minus_pair(a, a2)
                            && analysis.is_minus_pair(b, b2));
                    if same_sig {
                        prop_assert!(
                            check_triv_geometric(&analysis, a, a2, b, b2).unwrap()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn single_point_sets_are_always_admissible(
        d in 1usize..=3,
        radius in 2i64..=6,
        seed in any::<u64>(),
    ) {
        let stats = estimate_probabilities(d, 1, radius, 100, seed).unwrap();
        prop_assert_eq!(stats.admissible, 100);
        prop_assert_eq!(stats.strongly_admissible, 100);
        prop_assert!(stats.ci_admissible.0 <= 1.0 && stats.ci_admissible.1 >= 1.0 - 1e-12);
    }
}

#[test]
fn estimates_are_independent_of_thread_count() {
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| estimate_probabilities(2, 3, 8, 3_000, 123).unwrap());
    let four = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap()
        .install(|| estimate_probabilities(2, 3, 8, 3_000, 123).unwrap());
    assert_eq!(single.admissible, four.admissible);
    assert_eq!(single.strongly_admissible, four.strongly_admissible);
    assert_eq!(single.p_admissible.to_bits(), four.p_admissible.to_bits());
}

#[test]
fn confidence_intervals_shrink_as_the_square_root_of_trials() {
    let width = |n: u64| {
        let (lo, hi) = wilson_interval(n / 2, n, 1.96);
        hi - lo
    };
    let ratio = width(1600) / width(400);
    assert!(
        (ratio - 0.5).abs() < 0.05,
        "quadrupling trials should halve the interval, got ratio {ratio}"
    );
}
