//! End-to-end acceptance run: one PASS/FAIL line per criterion.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fockdil::direct_integral::{apply_id_tensor_adjoint, corollary_composite};
use fockdil::linalg::{hermitian_eigenvalues, random_c64, random_unit_vector};
use fockdil::markov::{
    choi_min_eigenvalue, observation_crosscheck, semigroup_defect, shifted_compression_check, stinespring, verify_theorem,
};
use fockdil::oracles::{closed_form_m2, continuum_m2, dense_adjoint_oracle, dense_tensor_oracle, CoherentOracle};
use fockdil::{f_section, BigSpace, FockVector, GridSpec, Interval, KVector, Section, Unit, C64};

const C1_NORM_TOL: f64 = 1e-12;
const C1_T1A_MAX: f64 = 1e-10;
const C1_RUNTIME: Duration = Duration::from_secs(10);
const C2_CLOSED_FORM_TOL: f64 = 0.005;
const C2_BOUND_SLACK: f64 = 1e-6;
const C2_RATIO: (f64, f64) = (1.7, 2.3);
const C2_RUNTIME: Duration = Duration::from_secs(300);
const C3_TOL: f64 = 1e-9;
const C4_VACUUM_TOL: f64 = 1e-10;
const C4_CHOI_TOL: f64 = 1e-9;
const C5_NORM_TOL: f64 = 1e-10;
const C5_LAW_TOL: f64 = 1e-10;
const C6_TOL: f64 = 1e-8;
const C7_TOL: f64 = 1e-8;
const C8_TOL: f64 = 1e-10;
const C8_PRODUCT_LIMIT: usize = 5000;
const C9_TOL: f64 = 1e-8;
const SUITE_RUNTIME: Duration = Duration::from_secs(600);

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = fn(&mut ChaCha8Rng) -> Outcome;

fn grid(m: usize, cutoff: usize) -> GridSpec {
    GridSpec::new(m, cutoff).expect("valid grid")
}

fn criterion_1(rng: &mut ChaCha8Rng) -> Outcome {
    let start = Instant::now();
    let g = grid(8, 2);
    let space = BigSpace::new(g, 3).unwrap();
    let r = verify_theorem(2, &Unit::vacuum(g), Some(&space), 100, rng).unwrap();
    let elapsed = start.elapsed();
    let pass = (r.a_norm - 1.0).abs() <= C1_NORM_TOL && r.t1a_norm <= C1_T1A_MAX && elapsed < C1_RUNTIME;
    Outcome {
        pass,
        detail: format!(
            "vacuum, k=2, m_unit=8, cutoff=2: ||a|| = {:.15}, ||T_1(a)|| = {:.3e} (<= {C1_T1A_MAX:e}), {:.2}s",
            r.a_norm,
            r.t1a_norm,
            elapsed.as_secs_f64()
        ),
    }
}

fn criterion_2(rng: &mut ChaCha8Rng) -> Outcome {
    let start = Instant::now();
    let c = one();
    let g = grid(64, 3);
    let r = verify_theorem(1, &Unit::new(c, g), None, 20, rng).unwrap();
    let cf = closed_form_m2(c, 64, 3);
    let mut pass = (r.m2_grid - cf).abs() <= C2_CLOSED_FORM_TOL && r.t1a_norm <= r.m2_grid + C2_BOUND_SLACK;

    let limit = continuum_m2(c, Some(3));
    let values: Vec<f64> = [8, 16, 32, 64]
        .iter()
        .map(|&m| {
            let g = grid(m, 3);
            f_section(1, &Unit::new(c, g).vector(m), &g).unwrap().m_integral()
        })
        .collect();
    let errors: Vec<f64> = values.iter().map(|v| (v - limit).abs()).collect();
    let ratios: Vec<f64> = errors.windows(2).map(|w| w[0] / w[1]).collect();
    pass &= ratios.iter().all(|r| (C2_RATIO.0..=C2_RATIO.1).contains(r));
    let elapsed = start.elapsed();
    pass &= elapsed < C2_RUNTIME;

    let target = 1.0 - (-1.0_f64).exp();
    Outcome {
        pass,
        detail: format!(
            "c=1, k=1, m_unit=64, cutoff=3: M^2 = {:.9} (closed form {cf:.9}), ||T_1(a)|| = {:.9}; \
             halving ratios vs cutoff-3 continuum {limit:.6}: {}; distance of M^2 to 1-e^-1 = {:.4e}; {:.1}s",
            r.m2_grid,
            r.t1a_norm,
            ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>().join(", "),
            (r.m2_grid - target).abs(),
            elapsed.as_secs_f64()
        ),
    }
}

fn criterion_3(rng: &mut ChaCha8Rng) -> Outcome {
    let g = grid(8, 2);
    let space = BigSpace::new(g, 3).unwrap();
    let mut worst: f64 = 0.0;
    for k in 1..=3 {
        let r = verify_theorem(k, &Unit::vacuum(g), Some(&space), 100, rng).unwrap();
        worst = worst.max(r.dagger_max_deviation);
    }
    for k in 1..=2 {
        let r = verify_theorem(k, &Unit::new(one(), g), None, 100, rng).unwrap();
        worst = worst.max(r.dagger_max_deviation);
    }
    Outcome {
        pass: worst <= C3_TOL,
        detail: format!(
            "100 random Y each, vacuum k=1..3 through the dilation and c=1 k=1..2 through the f-expansion: max deviation {worst:.3e}"
        ),
    }
}

fn subspace(dim: usize, d: usize, rng: &mut ChaCha8Rng) -> DMatrix<C64> {
    let cols: Vec<DVector<C64>> = (0..d).map(|_| random_unit_vector(dim, rng)).collect();
    DMatrix::from_columns(&cols).qr().q()
}

fn criterion_4(rng: &mut ChaCha8Rng) -> Outcome {
    let g = grid(8, 2);
    let space = BigSpace::new(g, 3).unwrap();
    let vac = Unit::vacuum(g);
    let g1 = stinespring(1, &vac, &space).unwrap();
    let g2 = stinespring(2, &vac, &space).unwrap();
    let vac_defects = [g1.isometry_defect().unwrap(), g2.isometry_defect().unwrap()];
    let choi_vac = choi_min_eigenvalue(&g1, &subspace(g1.l_dim(), 12, rng)).unwrap();

    let gc = grid(8, 3);
    let space_c = BigSpace::new(gc, 3).unwrap();
    let oracle = CoherentOracle::new(one(), 3);
    let unit = Unit::new(one(), gc);
    let mut coherent = Vec::new();
    for n in 1..=2 {
        let gn = stinespring(n, &unit, &space_c).unwrap();
        coherent.push((gn.isometry_defect().unwrap(), oracle.isometry_defect(n)));
    }
    let gc1 = stinespring(1, &unit, &space_c).unwrap();
    let choi_c = choi_min_eigenvalue(&gc1, &subspace(gc1.l_dim(), 12, rng)).unwrap();

    let pass = vac_defects.iter().all(|d| *d <= C4_VACUUM_TOL)
        && coherent.iter().all(|(d, b)| *d <= b + 1e-12)
        && choi_vac >= -C4_CHOI_TOL
        && choi_c >= -C4_CHOI_TOL;
    Outcome {
        pass,
        detail: format!(
            "vacuum defects n=1,2: {:.3e}, {:.3e}; c=1 cutoff 3 defects vs tail bound: {}; Choi min eigenvalue (12-dim) vacuum {choi_vac:.3e}, c=1 {choi_c:.3e}",
            vac_defects[0],
            vac_defects[1],
            coherent.iter().map(|(d, b)| format!("{d:.6e} <= {b:.6e}")).collect::<Vec<_>>().join(", ")
        ),
    }
}

fn random_fock(interval: Interval, cutoff: usize, max_level: usize, rng: &mut ChaCha8Rng) -> FockVector {
    let mut x = FockVector::zeros(interval, cutoff);
    let range = x.basis().up_to(max_level);
    for c in &mut x.coefficients_mut()[range] {
        *c = random_c64(rng);
    }
    x
}

/// A vector of `K` whose components respect `budget` total particles and
/// leave the last `tail` window cells empty.
fn admissible(space: &BigSpace, budget: usize, tail: usize, rng: &mut ChaCha8Rng) -> KVector {
    let kb = space.window().basis().clone();
    let kd = kb.dim();
    let edge = space.window().window_cells() - tail;
    let mut xi = space.zeros();
    for j in 0..xi.slices() {
        let eb = fockdil::OccupationBasis::shared(space.grid().alpha_cells(j), space.grid().cutoff());
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

fn criterion_5(rng: &mut ChaCha8Rng) -> Outcome {
    let g = grid(2, 3);
    let cutoff = g.cutoff();

    // products of basis vectors are pure reindexing, so associativity is exact
    let (a, b, c) = (Interval::new(0, 1).unwrap(), Interval::new(1, 3).unwrap(), Interval::new(3, 4).unwrap());
    let dims = [a, b, c].map(|i| FockVector::zeros(i, cutoff).dim());
    let mut assoc_exact = true;
    for p in 0..dims[0] {
        for q in 0..dims[1] {
            for r in 0..dims[2] {
                let x = FockVector::basis_vector(a, cutoff, p).unwrap();
                let y = FockVector::basis_vector(b, cutoff, q).unwrap();
                let z = FockVector::basis_vector(c, cutoff, r).unwrap();
                let left = x.multiply(&y).unwrap().multiply(&z).unwrap();
                let right = x.multiply(&y.multiply(&z).unwrap()).unwrap();
                assoc_exact &= left == right;
            }
        }
    }

    let space = BigSpace::new(g, 3).unwrap();
    let mut norm_gap: f64 = 0.0;
    let mut law_gap: f64 = 0.0;
    for _ in 0..10 {
        for n in 1..=2 {
            let x = random_fock(Interval::from_origin(g.cells(n)), cutoff, 1, rng);
            let xi = admissible(&space, cutoff - 1, g.cells(n), rng);
            let w = space.w_n(n, &x, &xi).unwrap();
            norm_gap = norm_gap.max((w.norm() - x.norm() * xi.norm()).abs() / (x.norm() * xi.norm()));
        }
        // w_2(x x' (x) Xi) = w_1(x (x) w_1(x' (x) Xi))
        let x = random_fock(Interval::from_origin(2), cutoff, 1, rng);
        let xp = random_fock(Interval::from_origin(2), cutoff, 1, rng);
        let xi = admissible(&space, 1, 4, rng);
        let joined = x.multiply(&xp.translate(2).unwrap()).unwrap();
        let lhs = space.w_n(2, &joined, &xi).unwrap();
        let rhs = space.w_n(1, &x, &space.w_n(1, &xp, &xi).unwrap()).unwrap();
        law_gap = law_gap.max(lhs.add_scaled(-one(), &rhs).unwrap().norm());
    }

    let window = space.window();
    let mut support_gap: f64 = 0.0;
    let mut monotone_min = f64::INFINITY;
    let mut previous: Option<DMatrix<C64>> = None;
    for n in 0..=window.window_units() {
        let by_dilation = window.theta_breve_by_conjugation(n).unwrap();
        let support = window.theta_breve_vacuum_projection(n).unwrap();
        support_gap = support_gap.max((&by_dilation - &support).norm());
        if let Some(p) = previous {
            monotone_min = monotone_min.min(hermitian_eigenvalues(&(&by_dilation - &p))[0]);
        }
        previous = Some(by_dilation);
    }
    let edge = window.theta_breve_by_conjugation(window.window_units()).unwrap();
    let identity_gap = (&edge - DMatrix::identity(window.dim(), window.dim())).norm();

    let pass = assoc_exact
        && norm_gap <= C5_NORM_TOL
        && law_gap <= C5_LAW_TOL
        && support_gap <= C5_LAW_TOL
        && monotone_min >= -C5_LAW_TOL
        && identity_gap <= C5_LAW_TOL;
    Outcome {
        pass,
        detail: format!(
            "associativity on basis triples exact: {assoc_exact}; relative norm gap of w_n {norm_gap:.3e}; \
             dilation law gap {law_gap:.3e}; θ̆_n vs support projection {support_gap:.3e}; \
             min eigenvalue of θ̆_(n+1) - θ̆_n {monotone_min:.3e}; θ̆ at window edge vs identity {identity_gap:.3e}"
        ),
    }
}

fn criterion_6(rng: &mut ChaCha8Rng) -> Outcome {
    let g = grid(8, 2);
    let space = BigSpace::new(g, 3).unwrap();
    let vac = Unit::vacuum(g);
    let g1 = stinespring(1, &vac, &space).unwrap();
    let g2 = stinespring(2, &vac, &space).unwrap();
    let d = semigroup_defect(&g1, &g2, 20, rng).unwrap();
    Outcome {
        pass: d <= C6_TOL,
        detail: format!("vacuum, m_unit=8, cutoff=2, window 3, 20 hermitian b: max ||T_2(b) - T_1(T_1(b))|| = {d:.3e}"),
    }
}

fn criterion_7(rng: &mut ChaCha8Rng) -> Outcome {
    let space = BigSpace::new(grid(8, 2), 3).unwrap();
    let r = shifted_compression_check(&space, 1, 1, 10, rng).unwrap();
    Outcome {
        pass: r.max_deviation <= C7_TOL && r.max_magnitude > 1e-6,
        detail: format!(
            "m_unit=8, cutoff=2, 10 rank-one operators: max deviation {:.3e}, largest matrix element {:.3e}",
            r.max_deviation, r.max_magnitude
        ),
    }
}

fn raw(s: &Section) -> DVector<C64> {
    let h = s.grid().h().sqrt();
    s.to_coords() / C64::new(h, 0.0)
}

fn criterion_8(rng: &mut ChaCha8Rng) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut largest_product = 0;
    let mut instances = 0;
    while instances < 50 {
        let m = rng.random_range(1..=8);
        let cutoff = rng.random_range(1..=3);
        let left_dim = rng.random_range(1..=6);
        let g = grid(m, cutoff);
        let x = Section::random(&g, 1, 1, rng);
        let xp = Section::random(&g, 1, 1, rng);
        let y = Section::random(&g, left_dim, 1, rng);
        let product: usize = (0..g.slices()).map(|j| left_dim * x.slice_dim(j)).sum();
        if product > C8_PRODUCT_LIMIT {
            continue;
        }
        instances += 1;
        largest_product = largest_product.max(product);

        let adj = dense_adjoint_oracle(&x, left_dim).unwrap();
        let v = apply_id_tensor_adjoint(&x, &y).unwrap();
        let expected = &adj * raw(&y);
        worst = worst.max((v - &expected).camax());

        let composite = corollary_composite(&x, &xp, &y).unwrap();
        let expected = dense_tensor_oracle(&xp, left_dim).unwrap() * expected;
        worst = worst.max((raw(&composite) - expected).camax());
    }
    Outcome {
        pass: worst <= C8_TOL,
        detail: format!("50 random instances, product dimension up to {largest_product}: max entry gap {worst:.3e}"),
    }
}

fn criterion_9(_: &mut ChaCha8Rng) -> Outcome {
    let space = BigSpace::new(grid(8, 2), 3).unwrap();
    let r = observation_crosscheck(one(), 1, &space).unwrap();
    let failed: Vec<&str> = r.checks.iter().filter(|c| !c.pass()).map(|c| c.name.as_str()).collect();
    let worst_coherent = r
        .cases
        .iter()
        .map(|c| (c.dagger_pipeline - c.dagger_closed_form).abs().max((c.inner_pipeline - c.inner_closed_form).norm()))
        .fold(0.0, f64::max);
    Outcome {
        pass: failed.is_empty() && worst_coherent <= C9_TOL,
        detail: format!(
            "{} cases, {} checks, largest closed-form gap {worst_coherent:.3e}{}",
            r.cases.len(),
            r.checks.len(),
            if failed.is_empty() { String::new() } else { format!("; failing: {}", failed.join(", ")) }
        ),
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 9] = [
        ("theorem, exact branch", criterion_1),
        ("theorem, quantitative branch", criterion_2),
        ("dagger identity", criterion_3),
        ("Markov property and complete positivity", criterion_4),
        ("dilation axioms", criterion_5),
        ("semigroup law at integers", criterion_6),
        ("intertwining", criterion_7),
        ("adjoint oracle equivalence", criterion_8),
        ("observation cross-check", criterion_9),
    ];
    let start = Instant::now();
    let mut all = true;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + i as u64);
        let t = Instant::now();
        let o = f(&mut rng);
        all &= o.pass;
        println!(
            "{} criterion {} ({name}): {} [{:.2}s]",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    let total = start.elapsed();
    let in_time = total < SUITE_RUNTIME;
    println!("{} suite runtime: {:.1}s (< {}s)", if in_time { "PASS" } else { "FAIL" }, total.as_secs_f64(), SUITE_RUNTIME.as_secs());
    if all && in_time {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
