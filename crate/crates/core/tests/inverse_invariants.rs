use cylweight::inverse::estimate_operator_norm;
use cylweight::{
    BSide, CylField, Error, InverseHandle, LinkSpectrum, PerturbationSpec, Tail, TidOperator, TimeGrid, WeightSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// smooth bump supported on [c - w, c + w]
fn bump(t: f64, c: f64, w: f64) -> f64 {
    let x = (t - c) / w;
    if x.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - x * x)).exp()
    }
}

fn random_field(grid: TimeGrid, spec: &LinkSpectrum, seed: u64) -> CylField {
    random_field_with_widths(grid, spec, seed, 1.5..4.0)
}

/// Per mode, up to three bumps placed relative to `t0`.
fn random_field_with_widths(grid: TimeGrid, spec: &LinkSpectrum, seed: u64, widths: std::ops::Range<f64>) -> CylField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = spec.total_dim();
    let params: Vec<Vec<(f64, f64, f64)>> = (0..dim)
        .map(|_| {
            let k = rng.gen_range(1..=3);
            (0..k)
                .map(|_| (rng.gen_range(6.0..20.0), rng.gen_range(widths.clone()), rng.gen_range(-2.0..2.0)))
                .collect()
        })
        .collect();
    let t0 = grid.t0;
    let coeffs = params
        .iter()
        .map(|ps| grid.times().iter().map(|&t| ps.iter().map(|&(c, w, a)| a * bump(t, t0 + c, w)).sum()).collect())
        .collect();
    CylField::new(grid, spec.clone(), coeffs, Tail::Compact).unwrap()
}

fn lattice() -> LinkSpectrum {
    LinkSpectrum::lattice(0.0, 3).unwrap()
}

fn sphere() -> LinkSpectrum {
    LinkSpectrum::sphere_laplacian(2, 3).unwrap()
}

fn grid() -> TimeGrid {
    TimeGrid::new(2.0, 40.0, 10_000).unwrap()
}

#[test]
fn right_inverse_on_random_fields() {
    let ops = [
        TidOperator::first_order(lattice()),
        TidOperator::first_order(sphere()),
        TidOperator::second_order(0.0, lattice()).unwrap(),
        TidOperator::second_order(0.0, sphere()).unwrap(),
    ];
    for op in &ops {
        let betas: &[f64] = if op.order() == 1 { &[-0.5, 0.0, 0.5] } else { &[-0.5, 0.5] };
        for &beta in betas {
            for sign in [BSide::Plus, BSide::Minus] {
                let h = InverseHandle::new(op.clone(), beta, sign, 2.0).unwrap();
                for s in 0..100 {
                    let f = random_field(grid(), op.spectrum(), s);
                    let u = h.apply_q(&f).unwrap();
                    let r = h.residual_sup(&u, &f).unwrap();
                    assert!(r <= 1e-6, "order {} beta {beta} {sign:?} seed {s}: {r}", op.order());
                }
            }
        }
    }
}

#[test]
fn perturbed_right_inverse() {
    let op = TidOperator::first_order(lattice());
    let h = InverseHandle::new(op.clone(), 0.5, BSide::Plus, 2.0)
        .unwrap()
        .with_perturbation(PerturbationSpec::oscillatory(0.01))
        .unwrap();
    for s in 0..20 {
        let f = random_field(grid(), op.spectrum(), 1000 + s);
        let (_, rep) = h.apply_q_perturbed(&f).unwrap();
        assert!(rep.residual_sup <= 1e-5, "seed {s}: {rep:?}");
        assert!(rep.ratio < 0.5);
    }
}

#[test]
fn gluing_across_the_lower_root() {
    for &c in &[0.0, 0.25] {
        let op = TidOperator::first_order(LinkSpectrum::lattice(c, 3).unwrap());
        for &beta in &[0.5, 1.25] {
            let (lower, _) = op.adjacent_roots(beta).unwrap();
            let up = InverseHandle::new(op.clone(), beta, BSide::Plus, 2.0).unwrap();
            let down = InverseHandle::new(op.clone(), lower, BSide::Minus, 2.0).unwrap();
            for s in 0..10 {
                let f = random_field(grid(), op.spectrum(), 77 + s);
                let d = up.apply_q(&f).unwrap().max_abs_diff(&down.apply_q(&f).unwrap()).unwrap();
                assert!(d <= 1e-9, "c {c} beta {beta}: {d}");
            }
        }
    }
}

#[test]
fn s_defect_lies_in_the_kernel() {
    for op in [TidOperator::first_order(lattice()), TidOperator::second_order(0.0, sphere()).unwrap()] {
        let h = InverseHandle::new(op.clone(), 0.5, BSide::Plus, 2.0).unwrap();
        for s in 0..10 {
            // P is differenced twice here (once inside S), so use a finer grid
            let g = TimeGrid::new(2.0, 40.0, 20_000).unwrap();
            let xi = random_field_with_widths(g, op.spectrum(), 300 + s, 3.0..6.0);
            let sx = h.apply_s(&xi).unwrap();
            let zero = CylField::zeros(sx.grid, sx.spectrum.clone(), Tail::Compact);
            let r = h.residual_sup(&sx, &zero).unwrap();
            assert!(r <= 1e-6, "order {}: {r}", op.order());
        }
    }
}

#[test]
fn operators_are_linear() {
    let op = TidOperator::second_order(0.0, lattice()).unwrap();
    let h = InverseHandle::new(op.clone(), -0.5, BSide::Plus, 2.0).unwrap();
    let f = random_field(grid(), op.spectrum(), 5);
    let g = random_field(grid(), op.spectrum(), 6);
    let (a, b) = (1.7, -0.3);
    let combo = f.scale(a).axpy(b, &g).unwrap();
    let lhs = h.apply_q(&combo).unwrap();
    let rhs = h.apply_q(&f).unwrap().scale(a).axpy(b, &h.apply_q(&g).unwrap()).unwrap();
    let scale = lhs.coeffs.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-10 * scale.max(1.0));
    let pl = h.apply_operator(&combo).unwrap();
    let pr = h.apply_operator(&f).unwrap().scale(a).axpy(b, &h.apply_operator(&g).unwrap()).unwrap();
    assert!(pl.max_abs_diff(&pr).unwrap() <= 1e-10 * scale.max(1.0));
}

fn norm_estimate(op: &TidOperator, beta: f64, sign: BSide, b: f64, t0: f64) -> f64 {
    let g = TimeGrid::new(t0, t0 + 38.0, 10_000).unwrap();
    let family: Vec<CylField> = (0..50).map(|s| random_field(g, op.spectrum(), 500 + s)).collect();
    let h = InverseHandle::new(op.clone(), beta, sign, t0).unwrap();
    let w = WeightSpec::sobolev(beta, 0.0, b, 2.0).unwrap();
    estimate_operator_norm(&h, &family, &w).unwrap()
}

#[test]
fn operator_norm_does_not_depend_on_t0() {
    let op = TidOperator::first_order(lattice());
    for &(beta, sign, b) in &[(0.5, BSide::Plus, 0.0), (0.0, BSide::Plus, 0.6)] {
        let est: Vec<f64> = [2.0, 20.0, 100.0].iter().map(|&t0| norm_estimate(&op, beta, sign, b, t0)).collect();
        let hi = est.iter().copied().fold(f64::MIN, f64::max);
        let lo = est.iter().copied().fold(f64::MAX, f64::min);
        assert!(lo > 0.0 && hi / lo <= 2.0, "beta {beta} b {b}: {est:?}");
    }
}

#[test]
fn oscillatory_threshold() {
    let op = TidOperator::first_order(lattice());
    let base = InverseHandle::new(op.clone(), 0.5, BSide::Plus, 2.0).unwrap();
    let f = random_field(grid(), op.spectrum(), 9);
    let big = base.with_perturbation(PerturbationSpec::oscillatory(5.0)).unwrap();
    assert!(matches!(big.apply_q_perturbed(&f), Err(Error::NonConvergent(_))));
}

