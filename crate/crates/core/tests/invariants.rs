use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fockdil::grid_fock::fock_dimension;
use fockdil::linalg::random_c64;
use fockdil::oracles::truncated_exp_real;
use fockdil::{exponential_vector, BigSpace, FockVector, GridSpec, Interval, KVector, OccupationBasis, Section, Unit, C64};

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

fn random_fock(interval: Interval, cutoff: usize, max_level: usize, rng: &mut ChaCha8Rng) -> FockVector {
    let mut x = FockVector::zeros(interval, cutoff);
    let range = x.basis().up_to(max_level);
    for c in &mut x.coefficients_mut()[range] {
        *c = random_c64(rng);
    }
    x
}

fn admissible(space: &BigSpace, budget: usize, tail: usize, rng: &mut ChaCha8Rng) -> KVector {
    let kb = space.window().basis().clone();
    let kd = kb.dim();
    let edge = space.window().window_cells() - tail;
    let mut xi = space.zeros();
    for j in 0..xi.slices() {
        let eb = OccupationBasis::shared(space.grid().alpha_cells(j), space.grid().cutoff());
        for (idx, c) in xi.component_mut(j).iter_mut().enumerate() {
            let (a, b) = (idx / kd, idx % kd);
            let clear = kb.state(b).last().is_none_or(|&p| (p as usize) < edge);
            if eb.occupation(a) + kb.occupation(b) <= budget && clear {
                *c = random_c64(rng);
            }
        }
    }
    xi
}

#[test]
fn basis_ordering_and_indexing() {
    for cells in 0..7 {
        for cutoff in 0..5 {
            let b = OccupationBasis::shared(cells, cutoff);
            assert_eq!(b.dim(), fock_dimension(cells, cutoff));
            assert!(b.state(0).is_empty());
            for i in 0..b.dim() {
                assert_eq!(b.index_of(b.state(i)), Some(i));
                if i > 0 {
                    let (p, q) = (b.state(i - 1), b.state(i));
                    assert!(p.len() < q.len() || (p.len() == q.len() && p < q));
                }
            }
        }
    }
}

#[test]
fn w_n_adjoint_matches_dense_matrix() {
    let grid = GridSpec::new(2, 1).unwrap();
    let space = BigSpace::new(grid, 2).unwrap();
    let kd = space.window().dim();
    let e1 = Interval::from_origin(2);
    let e1_dim = OccupationBasis::shared(2, 1).dim();
    let unit_weight = C64::new(1.0 / grid.h().sqrt(), 0.0);
    let layout = space.zeros().layout();

    // columns: w_1(e_p (x) xi) for every basis vector xi of K inside the range
    // the dilation accepts (no particle in the last cells of the window)
    let mut columns = Vec::new();
    let mut labels = Vec::new();
    for p in 0..e1_dim {
        let x = FockVector::basis_vector(e1, 1, p).unwrap();
        for j in 0..layout.slices() {
            for idx in 0..layout.slice_dim(j) * kd {
                let mut xi = space.zeros();
                xi.component_mut(j)[idx] = unit_weight;
                match space.w_n(1, &x, &xi) {
                    Ok(w) => {
                        columns.push(w.to_coords());
                        labels.push((p, j, idx));
                    }
                    Err(fockdil::Error::TruncationOverflow { .. }) => {}
                    Err(e) => panic!("{e}"),
                }
            }
        }
    }
    let w = DMatrix::from_columns(&columns);

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let y = Section::random_unit(&grid, 1, 1, &mut rng);
    let yk = space.tensor_vacuum(&y).unwrap();
    let dense = w.adjoint() * yk.to_coords();

    let full = space.w_n_adjoint(1, &yk).unwrap();
    let on_q = space.w_n_adjoint_on_q_range(1, &y).unwrap();
    let sqrt_h = grid.h().sqrt();
    let mut worst: f64 = 0.0;
    for (value, &(p, j, idx)) in dense.iter().zip(&labels) {
        let d = layout.slice_dim(j);
        let got = full.component(j)[p * d * kd + idx] * sqrt_h;
        worst = worst.max((got - value).norm());
        let (a, b) = (idx / kd, idx % kd);
        let reduced = if b == 0 { on_q.component(j)[p * d + a] * sqrt_h } else { C64::new(0.0, 0.0) };
        worst = worst.max((reduced - value).norm());
    }
    assert!(worst <= 1e-10, "dense adjoint gap {worst:e}");
    // w_1 is an isometry on its domain; inputs over the cutoff map to zero
    let kept: Vec<DVector<C64>> = columns.into_iter().filter(|c| c.norm() > 0.5).collect();
    let w = DMatrix::from_columns(&kept);
    let gram = w.adjoint() * &w;
    assert!((gram - DMatrix::<C64>::identity(kept.len(), kept.len())).norm() < 1e-12);
}

#[test]
fn vacuum_dilation_isometry_on_q_range() {
    let grid = GridSpec::new(4, 2).unwrap();
    let space = BigSpace::new(grid, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..5 {
        let y = Section::random(&grid, 1, 1, &mut rng);
        let yp = Section::random(&grid, 1, 1, &mut rng);
        let a = space.w_n_adjoint_on_q_range(1, &y).unwrap();
        let b = space.w_n_adjoint_on_q_range(1, &yp).unwrap();
        let lhs = fockdil::direct_integral::section_inner(&a, &b).unwrap();
        let rhs = fockdil::direct_integral::section_inner(&y, &yp).unwrap();
        assert!((lhs - rhs).norm() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn multiply_splits_norm_into_kept_and_filtered(seed in any::<u64>(), a in 1usize..4, b in 1usize..4, cutoff in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_fock(Interval::new(0, a).unwrap(), cutoff, cutoff, &mut rng);
        let y = random_fock(Interval::new(a, a + b).unwrap(), cutoff, cutoff, &mut rng);
        let kept = x.multiply(&y).unwrap().norm_sqr();
        let lost = x.filtering_defect(&y).unwrap().powi(2);
        let total = x.norm_sqr() * y.norm_sqr();
        prop_assert!((kept + lost - total).abs() <= 1e-12 * total);
    }

    #[test]
    fn factorize_round_trips(seed in any::<u64>(), cells in 1usize..6, cutoff in 1usize..4, split_frac in 0.0f64..=1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_fock(Interval::new(2, 2 + cells).unwrap(), cutoff, cutoff, &mut rng);
        let split = 2 + (split_frac * cells as f64).round() as usize;
        let f = x.factorize(split).unwrap();
        prop_assert!((f.norm() - x.norm()).abs() <= 1e-14 * x.norm());
        prop_assert_eq!(f.recompose(), x);
    }

    #[test]
    fn exponential_vector_norm(seed in any::<u64>(), m in 1usize..6, cells in 1usize..6, cutoff in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = GridSpec::new(m, cutoff).unwrap();
        let f: Vec<C64> = (0..cells).map(|_| random_c64(&mut rng)).collect();
        let e = exponential_vector(&f, Interval::from_origin(cells), &grid).unwrap();
        let energy: f64 = f.iter().map(|v| v.norm_sqr()).sum::<f64>() * grid.h();
        let expected = truncated_exp_real(energy, cutoff);
        prop_assert!((e.norm_sqr() - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn unit_vectors_factorize_up_to_filtering(re in -1.5f64..1.5, im in -1.5f64..1.5, s in 1usize..5, t in 1usize..5) {
        let grid = GridSpec::new(2, 3).unwrap();
        let unit = Unit::new(C64::new(re, im), grid);
        let product = unit.vector(s).multiply(&unit.vector(t).translate(s as isize).unwrap()).unwrap();
        let whole = unit.vector(s + t);
        // the cutoff only rescales the product
        let overlap = whole.inner(&product).unwrap().norm();
        prop_assert!((overlap - product.norm()).abs() <= 1e-12);
        prop_assert!((whole.norm() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn dilation_law(seed in any::<u64>(), cutoff in 2usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = GridSpec::new(2, cutoff).unwrap();
        let space = BigSpace::new(grid, 3).unwrap();
        let x = random_fock(Interval::from_origin(2), cutoff, 1, &mut rng);
        let xp = random_fock(Interval::from_origin(2), cutoff, 1, &mut rng);
        let xi = admissible(&space, cutoff - 2, 4, &mut rng);
        let joined = x.multiply(&xp.translate(2).unwrap()).unwrap();
        let lhs = space.w_n(2, &joined, &xi).unwrap();
        let rhs = space.w_n(1, &x, &space.w_n(1, &xp, &xi).unwrap()).unwrap();
        prop_assert!(lhs.add_scaled(-one(), &rhs).unwrap().norm() <= 1e-10 * lhs.norm().max(1.0));
        prop_assert!((lhs.norm() - joined.norm() * xi.norm()).abs() <= 1e-10 * lhs.norm().max(1.0));
    }

    #[test]
    fn q_n_increase(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = GridSpec::new(2, 2).unwrap();
        let space = BigSpace::new(grid, 3).unwrap();
        let xi = space.random_unit(&mut rng).unwrap();
        for n in 0..3 {
            let small = space.q_n_project(n, &xi).unwrap();
            let large = space.q_n_project(n + 1, &xi).unwrap();
            prop_assert!(small.norm() <= large.norm() + 1e-15);
            let nested = space.q_n_project(n, &large).unwrap();
            prop_assert_eq!(nested.to_coords(), small.to_coords());
            let via_dilation = space.theta_q_apply(n, &xi).unwrap();
            prop_assert!(via_dilation.add_scaled(-one(), &small).unwrap().norm() <= 1e-12);
        }
        let edge = space.q_n_project(3, &xi).unwrap();
        prop_assert_eq!(edge.to_coords(), xi.to_coords());
    }

    #[test]
    fn coords_round_trip(seed in any::<u64>(), m in 1usize..6, cutoff in 1usize..3, left in 1usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = GridSpec::new(m, cutoff).unwrap();
        let s = Section::random(&grid, left, 1, &mut rng);
        let c: DVector<C64> = s.to_coords();
        prop_assert!((c.norm() - s.norm()).abs() <= 1e-12 * s.norm());
        let back = Section::from_coords(&grid, left, 1, &c).unwrap();
        prop_assert!(back.add_scaled(-one(), &s).unwrap().norm() <= 1e-12 * s.norm());
    }
}
