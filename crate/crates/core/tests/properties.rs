use ipa_core::eval::{amari_index, block_permutation_index, GlobalTransform};
use ipa_core::isa::{
    ica, ncut_cluster, pairwise_dependence, pca_whiten, DimRule, Estimator, IcaOptions, KRule, NcutOptions,
    SimilarityGraph,
};
use ipa_core::seeding;
use ipa_core::tsmodel::{
    apply_polynomial, cumulate, difference, Boundary, ComponentLayout, DifferenceOrder, MatrixPolynomial, TimeSeries,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

fn gaussian(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = seeding::rng(seed, 0);
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn orthogonal(d: usize, seed: u64) -> DMatrix<f64> {
    gaussian(d, d, seed).qr().q()
}

fn poly(out: usize, inp: usize, degree: usize, seed: u64) -> MatrixPolynomial {
    MatrixPolynomial::new((0..=degree).map(|k| gaussian(out, inp, seed * 31 + k as u64)).collect()).unwrap()
}

fn series(t: usize, d: usize, seed: u64) -> TimeSeries {
    TimeSeries::new(gaussian(t, d, seed)).unwrap()
}

/// Integers on a coarse grid so repeated summation stays exact.
fn dyadic(t: usize, d: usize, seed: u64) -> TimeSeries {
    let mut rng = seeding::rng(seed, 3);
    TimeSeries::new(DMatrix::from_fn(t, d, |_, _| rng.random_range(-64i32..64) as f64 / 8.0)).unwrap()
}

fn layouts() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..=4, 1..=5)
}

/// Random block permutation for `layout`: block columns of the true layout
/// mapped onto a shuffled row order, each block a random orthogonal matrix.
fn block_permutation(layout: &ComponentLayout, seed: u64) -> GlobalTransform {
    let mut rng = seeding::rng(seed, 7);
    let m = layout.components();
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut rng);
    let rows = ComponentLayout::new(order.iter().map(|&k| layout.dims()[k]).collect()).unwrap();
    let ro = rows.offsets();
    let co = layout.offsets();
    let n = layout.total();
    let mut g = DMatrix::zeros(n, n);
    for (pos, &k) in order.iter().enumerate() {
        let d = layout.dims()[k];
        let block = orthogonal(d, seed + k as u64) * rng.random_range(0.5..2.0);
        g.view_mut((ro[pos], co[k]), (d, d)).copy_from(&block);
    }
    GlobalTransform::new(g, rows, layout.clone()).unwrap()
}

fn block_diagonal_orthogonal(layout: &ComponentLayout, seed: u64) -> DMatrix<f64> {
    let n = layout.total();
    let off = layout.offsets();
    let mut q = DMatrix::zeros(n, n);
    for (k, &d) in layout.dims().iter().enumerate() {
        q.view_mut((off[k], off[k]), (d, d))
            .copy_from(&orthogonal(d, seed + 100 + k as u64));
    }
    q
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn filtering_is_linear(seed in 0u64..10_000, deg in 0usize..4, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let f = poly(3, 2, deg, seed);
        let u = series(30, 2, seed + 1);
        let v = series(30, 2, seed + 2);
        for boundary in [Boundary::TruncateFirstN, Boundary::ZeroPadPast] {
            let combo = TimeSeries::new(u.data() * a + v.data() * b).unwrap();
            let lhs = apply_polynomial(&f, &combo, boundary).unwrap();
            let rhs = apply_polynomial(&f, &u, boundary).unwrap().data() * a
                + apply_polynomial(&f, &v, boundary).unwrap().data() * b;
            prop_assert!((lhs.data() - rhs).amax() < 1e-10);
        }
    }

    #[test]
    fn shift_delays_output(seed in 0u64..10_000, deg in 0usize..3, k in 0usize..4) {
        let f = poly(2, 2, deg, seed);
        let u = series(25, 2, seed + 5);
        let direct = apply_polynomial(&f, &u, Boundary::ZeroPadPast).unwrap();
        let shifted = apply_polynomial(&f.shifted(k), &u, Boundary::ZeroPadPast).unwrap();
        prop_assert!(shifted.data().rows(0, k).amax() == 0.0);
        prop_assert_eq!(shifted.data().rows(k, 25 - k).into_owned(), direct.data().rows(0, 25 - k).into_owned());
    }

    #[test]
    fn difference_matches_binomial_operator(seed in 0u64..10_000, r in 0usize..5) {
        let u = dyadic(40, 3, seed);
        let r = DifferenceOrder(r);
        let iterated = difference(&u, r).unwrap();
        let op = apply_polynomial(&MatrixPolynomial::difference_operator(r, 3), &u, Boundary::TruncateFirstN).unwrap();
        prop_assert_eq!(iterated, op);
    }

    #[test]
    fn cumulate_inverts_difference(seed in 0u64..10_000, r in 0usize..4, t in 5usize..120) {
        let u = dyadic(t, 2, seed);
        let r = DifferenceOrder(r);
        let heads: Vec<DVector<f64>> = (0..r.get()).map(|i| u.sample(i)).collect();
        let back = cumulate(&difference(&u, r).unwrap(), r, &heads).unwrap();
        prop_assert!((back.data() - u.data()).amax() <= 1e-12);
    }

    #[test]
    fn index_is_zero_on_block_permutations(dims in layouts(), seed in 0u64..10_000) {
        let layout = ComponentLayout::new(dims).unwrap();
        let gt = block_permutation(&layout, seed);
        prop_assert!(block_permutation_index(&gt).unwrap().index.abs() < 1e-12);
    }

    #[test]
    fn index_invariances(dims in layouts(), seed in 0u64..10_000, scale in prop_oneof![-50.0f64..-0.01, 0.01f64..50.0]) {
        let layout = ComponentLayout::new(dims).unwrap();
        let n = layout.total();
        let g = gaussian(n, n, seed);
        let base = GlobalTransform::new(g.clone(), layout.clone(), layout.clone()).unwrap();
        let i0 = block_permutation_index(&base).unwrap().index;
        prop_assert!((0.0..=1.0).contains(&i0));

        // within-block orthogonal transforms of the block columns
        let q = block_diagonal_orthogonal(&layout, seed);
        let rotated = GlobalTransform::new(&g * q, layout.clone(), layout.clone()).unwrap();
        let i1 = block_permutation_index(&rotated).unwrap().index;

        // block-row permutation carries the row layout along
        let mut rng = seeding::rng(seed, 11);
        let mut order: Vec<usize> = (0..layout.components()).collect();
        order.shuffle(&mut rng);
        let off = layout.offsets();
        let rows: Vec<usize> = order.iter().flat_map(|&k| off[k]..off[k + 1]).collect();
        let permuted = GlobalTransform::new(
            g.select_rows(&rows),
            ComponentLayout::new(order.iter().map(|&k| layout.dims()[k]).collect()).unwrap(),
            layout.clone(),
        ).unwrap();
        let i2 = block_permutation_index(&permuted).unwrap().index;

        let scaled = GlobalTransform::new(&g * scale, layout.clone(), layout.clone()).unwrap();
        let i3 = block_permutation_index(&scaled).unwrap().index;

        prop_assert!((i1 - i0).abs() < 1e-10);
        prop_assert!((i2 - i0).abs() < 1e-10);
        prop_assert!((i3 - i0).abs() < 1e-10);
    }

    #[test]
    fn within_block_rotation_keeps_block_permutations_exact(dims in layouts(), seed in 0u64..10_000) {
        let layout = ComponentLayout::new(dims).unwrap();
        let gt = block_permutation(&layout, seed);
        let q = block_diagonal_orthogonal(&layout, seed + 1);
        let rotated = GlobalTransform::new(&gt.g * q, gt.row_layout.clone(), layout.clone()).unwrap();
        prop_assert!(block_permutation_index(&rotated).unwrap().index.abs() < 1e-10);
    }

    #[test]
    fn index_grows_toward_confusion(dims in prop::collection::vec(1usize..=3, 2..=5), seed in 0u64..10_000) {
        let layout = ComponentLayout::new(dims).unwrap();
        let gt = block_permutation(&layout, seed);
        let n = layout.total();
        // every block of the target has unit Frobenius norm
        let rd = gt.row_layout.assignment();
        let cd = layout.assignment();
        let target = DMatrix::from_fn(n, n, |i, j| {
            1.0 / ((gt.row_layout.dims()[rd[i]] * layout.dims()[cd[j]]) as f64).sqrt()
        });
        let mut last = -1.0;
        for step in 0..=10 {
            let a = step as f64 / 10.0;
            let g = gt.g.abs() * (1.0 - a) + &target * a;
            let idx = block_permutation_index(&GlobalTransform::new(g, gt.row_layout.clone(), layout.clone()).unwrap()).unwrap().index;
            prop_assert!(idx >= last - 1e-12);
            last = idx;
        }
        prop_assert!((last - 1.0).abs() < 1e-12);
    }

    #[test]
    fn amari_is_scale_invariant_exactly(seed in 0u64..10_000, m in 2usize..8, e in -8i32..8) {
        let b = gaussian(m, m, seed).abs();
        let s = 2f64.powi(e);
        prop_assert_eq!(amari_index(&b).unwrap(), amari_index(&(&b * s)).unwrap());
    }

    #[test]
    fn clustering_is_label_equivariant(dims in prop::collection::vec(1usize..=4, 2..=5), seed in 0u64..10_000) {
        let layout = ComponentLayout::new(dims).unwrap();
        let a = layout.assignment();
        let n = a.len();
        let mut rng = seeding::rng(seed, 5);
        let mut w = DMatrix::from_fn(n, n, |i, j| {
            if i == j { 0.0 } else if a[i] == a[j] { rng.random_range(0.5..1.0) } else { rng.random_range(0.0..0.05) }
        });
        w = (&w + w.transpose()) * 0.5;
        let g = SimilarityGraph::new(w.clone()).unwrap();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        // coordinate k of the permuted graph is coordinate perm[k] of the original
        let gp = SimilarityGraph::new(DMatrix::from_fn(n, n, |i, j| w[(perm[i], perm[j])])).unwrap();
        let m = layout.components();
        let p0 = ncut_cluster(&g, KRule::Fixed(m), &NcutOptions::default()).unwrap().partition;
        let p1 = ncut_cluster(&gp, KRule::Fixed(m), &NcutOptions::default()).unwrap().partition;
        for i in 0..n {
            for j in 0..n {
                let same0 = p0.assignment()[perm[i]] == p0.assignment()[perm[j]];
                let same1 = p1.assignment()[i] == p1.assignment()[j];
                prop_assert_eq!(same0, same1);
            }
        }
    }

    #[test]
    fn whitening_holds_for_every_rule(seed in 0u64..10_000, d in 2usize..7) {
        let u = TimeSeries::new(gaussian(800, d, seed) * gaussian(d, d, seed + 1)).unwrap();
        for rule in [DimRule::Fixed(d), DimRule::EigenGap, DimRule::Energy(0.8)] {
            let (stage, out) = pca_whiten(&u, rule).unwrap();
            let dev = (out.covariance() - DMatrix::identity(stage.kept(), stage.kept())).amax();
            prop_assert!(dev <= 1e-6, "{:?}: {}", rule, dev);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn ica_rotation_is_orthogonal_even_when_stopped_early(seed in 0u64..10_000, d in 1usize..6, sweeps in 1usize..6) {
        let mut rng = seeding::rng(seed, 2);
        let raw = DMatrix::from_fn(1_000, d, |_, _| rng.random_range(-1.0..1.0));
        let (_, w) = pca_whiten(&TimeSeries::new(raw).unwrap(), DimRule::Fixed(d)).unwrap();
        let opts = IcaOptions { max_sweeps: sweeps, tol: 1e-6, restarts: 2, seed };
        match ica(&w, &opts) {
            Ok((stage, _)) => {
                let r = &stage.rotation;
                prop_assert!((r.transpose() * r - DMatrix::identity(d, d)).amax() <= 1e-8);
            }
            Err(ipa_core::Error::NoConvergence { log, .. }) => prop_assert_eq!(log.len(), sweeps),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }

    #[test]
    fn dependence_graph_is_exactly_symmetric(seed in 0u64..10_000, d in 2usize..6) {
        let y = series(600, d, seed);
        for est in [Estimator::default(), Estimator::AbsCorr] {
            let g = pairwise_dependence(&y, &est, seed).unwrap();
            let w = g.weights();
            prop_assert_eq!(w, &w.transpose());
            prop_assert!(w.iter().all(|v| *v >= 0.0));
        }
    }
}
