//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Runs as a plain binary (`harness = false`) so the report is always printed:
//! `cargo test -p qdf-core --test acceptance`.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use qdf::classical::{self, ClassicalExchSeq, Dist, FinDist, Kernel};
use qdf::cpmaps::{ChoiMap, Direction};
use qdf::cstar::{Algebra, Element, StateVec};
use qdf::definetti::{
    default_atoms, factorization_error, mediating_map, moment_analysis, reconstruct, synthesize,
    uniqueness_check, AtomSet, Cone, Mixture, ReconstructOptions,
};
use qdf::exchange::{
    check_exchangeable, eta_sigma_element, eta_tau, iota_embed, restrict_state, ExchSeq,
    TensorPower,
};
use qdf::fixtures;
use qdf::linalg::{self, CMat};
use qdf::perm;

use common::*;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn max_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let seq = fixtures::copied_coin(3).map_err(err)?;
    let rec = reconstruct(
        &seq,
        &fixtures::computational_atoms(),
        &ReconstructOptions::default(),
    )
    .map_err(err)?;
    let elapsed = start.elapsed();
    let dev = max_norm(rec.mixture.weights(), &[0.5, 0.5]);
    ensure(dev <= 1e-8, || format!("weights off by {dev:.2e}"))?;
    ensure(rec.residual <= 1e-10, || {
        format!("residual {:.2e}", rec.residual)
    })?;
    ensure(elapsed < Duration::from_secs(1), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "weights (0.5, 0.5) within {dev:.1e}, residual {:.1e}, {elapsed:.2?}",
        rec.residual
    ))
}

fn criterion_2() -> Outcome {
    let seq = fixtures::maximally_mixed(3).map_err(err)?;
    let opts = ReconstructOptions::default();
    let single = reconstruct(&seq, &fixtures::maximally_mixed_atom(), &opts).map_err(err)?;
    ensure((single.mixture.weights()[0] - 1.0).abs() <= 1e-12, || {
        format!("singleton weight {}", single.mixture.weights()[0])
    })?;
    ensure(single.residual <= 1e-10, || {
        format!("singleton residual {:.2e}", single.residual)
    })?;
    let atoms = default_atoms(2, 200, 0).map_err(err)?;
    let rec = reconstruct(&seq, &atoms, &opts).map_err(err)?;
    let bary = rec.mixture.barycenter().map_err(err)?;
    let half = StateVec::maximally_mixed(2).map_err(err)?;
    let dist = bary.trace_distance(&half).map_err(err)?;
    ensure(dist <= 1e-6, || {
        format!("barycenter at trace distance {dist:.2e}")
    })?;
    Ok(format!(
        "singleton residual {:.1e}; 200 atoms: barycenter distance {dist:.1e} (fit residual {:.2e})",
        single.residual, rec.residual
    ))
}

fn criterion_3() -> Outcome {
    let opts = ReconstructOptions::default();
    let mut worst = 0.0f64;
    let mut worst_affine = 0.0f64;
    for trial in 0..50u64 {
        let mut rng = rng(1000 + trial);
        let k = 2 + (trial as usize % 7);
        let atoms = default_atoms(2, k, 7000 + trial).map_err(err)?;
        let analysis = moment_analysis(&atoms, 4);
        ensure(analysis.independent(), || {
            format!("trial {trial}: atoms not moment independent")
        })?;
        let m1 = Mixture::new(atoms.clone(), dirichlet(&mut rng, k), 1e-12).map_err(err)?;
        let seq = synthesize(&m1, 4).map_err(err)?;
        let rec = reconstruct(&seq, &atoms, &opts).map_err(err)?;
        worst = worst.max(max_norm(rec.mixture.weights(), m1.weights()));

        let m2 = Mixture::new(atoms, dirichlet(&mut rng, k), 1e-12).map_err(err)?;
        let s2 = synthesize(&m2, 4).map_err(err)?;
        for lambda in [0.0, 0.25, 0.5, 1.0] {
            let mixed = synthesize(&m1.convex(lambda, &m2).map_err(err)?, 4).map_err(err)?;
            for n in 1..=4 {
                let lin = seq.level(n).density() * linalg::c(lambda, 0.0)
                    + s2.level(n).density() * linalg::c(1.0 - lambda, 0.0);
                worst_affine = worst_affine.max(linalg::max_abs(&(mixed.level(n).density() - lin)));
            }
        }
    }
    ensure(worst <= 1e-6, || format!("round trip off by {worst:.2e}"))?;
    ensure(worst_affine <= 1e-12, || {
        format!("affinity off by {worst_affine:.2e}")
    })?;
    Ok(format!(
        "50 round trips within {worst:.1e}, affinity within {worst_affine:.1e}"
    ))
}

fn check_cone(cone: &Cone, atoms: &AtomSet, seed: u64) -> Result<(f64, f64), String> {
    ensure(moment_analysis(atoms, cone.depth()).independent(), || {
        "atoms not moment independent".into()
    })?;
    let med = mediating_map(cone, atoms, &ReconstructOptions::default()).map_err(err)?;
    let fe = factorization_error(cone, &med).map_err(err)?;
    let report = uniqueness_check(cone, atoms, 10, seed).map_err(err)?;
    Ok((fe, report.max_pairwise_distance))
}

fn criterion_4() -> Outcome {
    let cone = fixtures::measure_and_copy_cone(4).map_err(err)?;
    let (mut worst_fe, mut worst_spread) = check_cone(&cone, &fixtures::computational_atoms(), 1)?;
    for trial in 0..20u64 {
        let mut rng = rng(2000 + trial);
        let apex_dim = 1 + (trial as usize % 2);
        let k = 2 + (trial as usize % 4);
        let atoms = default_atoms(2, k, 9000 + trial).map_err(err)?;
        let effects = random_povm(&mut rng, apex_dim, k);
        let cone = Cone::measure_prepare(
            Algebra::matrix(apex_dim).map_err(err)?,
            &effects,
            &atoms,
            4,
            1e-9,
        )
        .map_err(err)?;
        let (fe, spread) =
            check_cone(&cone, &atoms, trial).map_err(|e| format!("cone {trial}: {e}"))?;
        worst_fe = worst_fe.max(fe);
        worst_spread = worst_spread.max(spread);
    }
    ensure(worst_fe <= 1e-7, || {
        format!("factorization error {worst_fe:.2e}")
    })?;
    ensure(worst_spread <= 1e-8, || {
        format!("restart spread {worst_spread:.2e}")
    })?;
    Ok(format!(
        "21 cones: factorization error <= {worst_fe:.1e}, restart spread <= {worst_spread:.1e}"
    ))
}

fn criterion_5() -> Outcome {
    let seq = fixtures::singlet().map_err(err)?;
    ensure(check_exchangeable(&seq).verdict, || {
        "singlet rejected".into()
    })?;
    let r_min = singlet_residual_oracle(&bloch_ball_grid(), 2000);
    let sets: Vec<(&str, AtomSet)> = vec![
        ("computational", fixtures::computational_atoms()),
        ("maximally mixed", fixtures::maximally_mixed_atom()),
        ("default 200", default_atoms(2, 200, 0).map_err(err)?),
        ("default 500", default_atoms(2, 500, 1).map_err(err)?),
        ("Bloch grid", fixtures::bloch_ball_atoms().map_err(err)?),
        ("equator", fixtures::equator_atoms().map_err(err)?),
    ];
    let mut lowest = f64::INFINITY;
    for (name, atoms) in &sets {
        let rec = reconstruct(&seq, atoms, &ReconstructOptions::default()).map_err(err)?;
        ensure(rec.residual >= 0.9 * r_min, || {
            format!("{name}: residual {:.4} below 0.9 r_min", rec.residual)
        })?;
        lowest = lowest.min(rec.residual);
    }
    Ok(format!(
        "r_min {r_min:.4}; lowest residual over {} atom sets {lowest:.4}",
        sets.len()
    ))
}

fn criterion_6() -> Outcome {
    let base = Algebra::matrix(2).map_err(err)?;
    let level = |n: usize| TensorPower::new(&base, n).map(|t| t.algebra()).map_err(err);
    let mut worst = 0.0f64;
    for trial in 0..100u64 {
        let mut rng = rng(3000 + trial);
        let n = 1 + (trial as usize % 4);
        let m = n + (trial as usize / 4) % (5 - n);
        let k = m + (trial as usize / 16) % (5 - m);
        let tau = random_injection(&mut rng, n, m);
        let upsilon = random_injection(&mut rng, m, k);
        let a = random_element(&mut rng, &level(n)?);
        let stepwise = eta_tau(
            &base,
            &eta_tau(&base, &a, &tau, m).map_err(err)?,
            &upsilon,
            k,
        )
        .map_err(err)?;
        let direct = eta_tau(&base, &a, &perm::compose(&upsilon, &tau), k).map_err(err)?;
        worst = worst.max(stepwise.max_distance(&direct).map_err(err)?);

        let inclusion = eta_tau(&base, &a, &perm::identity(n), m).map_err(err)?;
        ensure(inclusion == iota_embed(&base, &a, m).map_err(err)?, || {
            format!("trial {trial}: inclusion differs from iota")
        })?;
        let sigma = random_injection(&mut rng, n, n);
        let bijection = eta_tau(&base, &a, &sigma, n).map_err(err)?;
        ensure(
            bijection == eta_sigma_element(&base, &a, &sigma).map_err(err)?,
            || format!("trial {trial}: bijection differs from eta_sigma"),
        )?;
    }
    ensure(worst <= 1e-12, || {
        format!("composition law off by {worst:.2e}")
    })?;
    Ok(format!(
        "100 triples: composition within {worst:.1e}; inclusions and bijections exact"
    ))
}

/// Average of `P_σ ρ P_σ†` over `S_n`.
fn symmetrize(rho: &CMat, n: usize) -> CMat {
    let perms = perm::all_permutations(n);
    let mut out = CMat::zeros(rho.nrows(), rho.ncols());
    for p in &perms {
        let map = linalg::factor_permutation_indices(2, n, p);
        out += linalg::conjugate_by_index_map(rho, &map);
    }
    out.unscale(perms.len() as f64)
}

fn criterion_7() -> Outcome {
    let base = Algebra::matrix(2).map_err(err)?;
    let mut worst = 0.0f64;
    for trial in 0..20u64 {
        let mut rng = rng(4000 + trial);
        // a family built level by level from a symmetrized random top state
        let top = symmetrize(&random_density(&mut rng, 16), 4);
        let mut reps = vec![top];
        for n in (1..4).rev() {
            reps.insert(0, linalg::partial_trace_tail(&reps[0], 2));
            assert_eq!(reps[0].nrows(), 1 << n);
        }
        let family = ExchSeq::from_reps(base.clone(), &reps, 1e-9).map_err(err)?;
        ensure(check_exchangeable(&family).verdict, || {
            "family not exchangeable".into()
        })?;
        // a second family from a mixture, and a third rebuilt from that mixture's top level
        let atoms = default_atoms(2, 5, 4100 + trial).map_err(err)?;
        let mix = Mixture::new(atoms, dirichlet(&mut rng, 5), 1e-12).map_err(err)?;
        let synthesized = synthesize(&mix, 4).map_err(err)?;
        for seq in [&family, &synthesized] {
            let top = seq.level(4);
            for n in 1..=4 {
                let r = restrict_state(&base, top, n).map_err(err)?;
                worst = worst.max(linalg::max_abs(&(r.density() - seq.level(n).density())));
            }
        }
        let rebuilt: Vec<StateVec> = (1..=4)
            .map(|n| restrict_state(&base, synthesized.level(4), n))
            .collect::<qdf::Result<_>>()
            .map_err(err)?;
        for (a, b) in rebuilt.iter().zip(synthesized.states()) {
            worst = worst.max(linalg::max_abs(&(a.density() - b.density())));
        }
    }
    ensure(worst <= 1e-12, || format!("levels differ by {worst:.2e}"))?;
    Ok(format!(
        "40 families: top level determines all levels within {worst:.1e}"
    ))
}

fn random_dist(rng: &mut rand_chacha::ChaCha8Rng, k: usize) -> Dist<usize> {
    Dist::new(dirichlet(rng, k).into_iter().enumerate().collect()).unwrap()
}

fn criterion_8() -> Outcome {
    let mut worst = 0.0f64;
    for trial in 0..100u64 {
        let mut rng = rng(5000 + trial);
        let mu = random_dist(&mut rng, 4);
        // flatten ∘ dirac = id, flatten ∘ map(dirac) = id
        worst = worst.max(Dist::dirac(mu.clone()).flatten().distance(&mu));
        worst = worst.max(mu.map(|x| Dist::dirac(*x)).flatten().distance(&mu));
        // flatten ∘ flatten = flatten ∘ map(flatten) on a three-level distribution
        let inner: Vec<Dist<Dist<usize>>> = (0..3)
            .map(|_| {
                let w = dirichlet(&mut rng, 2);
                Dist::new(vec![
                    (random_dist(&mut rng, 4), w[0]),
                    (random_dist(&mut rng, 4), w[1]),
                ])
                .unwrap()
            })
            .collect();
        let w = dirichlet(&mut rng, 3);
        let outer = Dist::new(inner.into_iter().zip(w).collect()).unwrap();
        let a = outer.flatten().flatten();
        let b = outer.map(|d| d.flatten()).flatten();
        worst = worst.max(a.distance(&b));
        // Kleisli associativity against explicit double sums
        let space = |k: usize| (0..k).map(|i| format!("x{i}")).collect::<Vec<_>>();
        let (f, g, h) = (
            random_stochastic(&mut rng, 3, 4),
            random_stochastic(&mut rng, 4, 2),
            random_stochastic(&mut rng, 2, 3),
        );
        let kf = Kernel::from_matrix(space(3), space(4), &f).map_err(err)?;
        let kg = Kernel::from_matrix(space(4), space(2), &g).map_err(err)?;
        let kh = Kernel::from_matrix(space(2), space(3), &h).map_err(err)?;
        let left =
            classical::kleisli_compose(&classical::kleisli_compose(&kf, &kg).map_err(err)?, &kh)
                .map_err(err)?;
        let right =
            classical::kleisli_compose(&kf, &classical::kleisli_compose(&kg, &kh).map_err(err)?)
                .map_err(err)?;
        worst = worst.max(left.max_distance(&right).map_err(err)?);
        let expected = Kernel::from_matrix(
            space(3),
            space(3),
            &stochastic_product(&stochastic_product(&f, &g), &h),
        )
        .map_err(err)?;
        worst = worst.max(left.max_distance(&expected).map_err(err)?);
    }
    ensure(worst <= 1e-12, || format!("monad laws off by {worst:.2e}"))?;

    let opts = ReconstructOptions::default();
    let grid = fixtures::coin_grid();
    let coin = fixtures::coin_bag(5).map_err(err)?;
    let hs = classical::hs_reconstruct(&coin, &grid, &opts).map_err(err)?;
    let coin_dev = max_norm(&hs.weights, &[1.0 / 3.0; 3]);
    ensure(coin_dev <= 1e-8, || {
        format!("coin weights off by {coin_dev:.2e}")
    })?;

    let mut agreement = 0.0f64;
    let mut cases: Vec<(ClassicalExchSeq, Vec<FinDist>)> = vec![(coin, grid)];
    for trial in 0..5u64 {
        let mut rng = rng(5500 + trial);
        let labels = classical::labels(&["a", "b", "c"]);
        let grid: Vec<FinDist> = (0..4)
            .map(|_| FinDist::new(labels.clone(), dirichlet(&mut rng, 3)).unwrap())
            .collect();
        let seq = ClassicalExchSeq::mixture(&grid, &dirichlet(&mut rng, 4), 3).map_err(err)?;
        cases.push((seq, grid));
    }
    for (seq, grid) in &cases {
        let hs = classical::hs_reconstruct(seq, grid, &opts).map_err(err)?;
        let q = reconstruct(
            &seq.to_exch_seq().map_err(err)?,
            &classical::grid_atoms(grid).map_err(err)?,
            &opts,
        )
        .map_err(err)?;
        agreement = agreement.max(max_norm(&hs.weights, q.mixture.weights()));
    }
    ensure(agreement <= 1e-8, || {
        format!("encodings disagree by {agreement:.2e}")
    })?;
    Ok(format!(
        "monad laws within {worst:.1e}; coin weights within {coin_dev:.1e}; commutative encoding agrees within {agreement:.1e}"
    ))
}

fn criterion_9() -> Outcome {
    let opts = ReconstructOptions::default();
    let default_200 = default_atoms(2, 200, 0).map_err(err)?;
    let fixtures_set: Vec<(&str, ExchSeq, AtomSet)> = vec![
        (
            "copied coin",
            fixtures::copied_coin(4).map_err(err)?,
            fixtures::computational_atoms(),
        ),
        (
            "copied coin",
            fixtures::copied_coin(4).map_err(err)?,
            default_atoms(2, 20, 3).map_err(err)?,
        ),
        (
            "maximally mixed",
            fixtures::maximally_mixed(4).map_err(err)?,
            default_200.clone(),
        ),
        (
            "maximally mixed",
            fixtures::maximally_mixed(4).map_err(err)?,
            fixtures::computational_atoms(),
        ),
        (
            "singlet",
            fixtures::singlet().map_err(err)?,
            default_200.clone(),
        ),
        (
            "singlet",
            fixtures::singlet().map_err(err)?,
            fixtures::computational_atoms(),
        ),
        (
            "equator",
            synthesize(&fixtures::equator_mixture().map_err(err)?, 4).map_err(err)?,
            default_atoms(2, 50, 5).map_err(err)?,
        ),
    ];
    let mut checked = 0;
    for (name, seq, atoms) in &fixtures_set {
        let mut previous = 0.0;
        for n in 1..=seq.depth() {
            let r = reconstruct(&seq.truncated(n).map_err(err)?, atoms, &opts)
                .map_err(err)?
                .residual;
            ensure(r >= previous - 1e-12, || {
                format!("{name}: residual fell from {previous:.3e} to {r:.3e} at depth {n}")
            })?;
            previous = r;
            checked += 1;
        }
    }

    let qubit = Algebra::matrix(2).map_err(err)?;
    let transpose = ChoiMap::transpose(2, Direction::Heisenberg).map_err(err)?;
    ensure(!transpose.is_completely_positive(1e-9), || {
        "transpose accepted as CP".into()
    })?;
    let identity = ChoiMap::identity(&qubit, Direction::Heisenberg);
    ensure(
        identity.is_completely_positive(1e-9) && identity.is_unital(1e-9).map_err(err)?,
        || "identity rejected".into(),
    )?;
    let depolarizing = ChoiMap::depolarizing(2).map_err(err)?;
    ensure(depolarizing.is_completely_positive(1e-9), || {
        "depolarizing rejected as CP".into()
    })?;
    ensure(depolarizing.is_trace_preserving(1e-9).map_err(err)?, || {
        "depolarizing not trace preserving".into()
    })?;
    ensure(
        depolarizing
            .clone()
            .dualize()
            .is_unital(1e-9)
            .map_err(err)?,
        || "dual depolarizing not unital".into(),
    )?;
    let unit = Element::from_matrix(linalg::identity(2)).map_err(err)?;
    let _ = identity.apply_element(&unit).map_err(err)?;
    Ok(format!(
        "{checked} depth steps monotone; transpose rejected, identity and depolarizing accepted"
    ))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let suite_start = Instant::now();
    let criteria: [Criterion; 9] = [
        ("copied-coin belief", criterion_1),
        ("maximally mixed belief", criterion_2),
        ("synthesize/reconstruct round trip", criterion_3),
        ("cone factorization", criterion_4),
        ("singlet non-representability", criterion_5),
        ("injection functoriality", criterion_6),
        ("finite consistency", criterion_7),
        ("classical side", criterion_8),
        ("monotonicity and CP predicates", criterion_9),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let elapsed = start.elapsed();
        match outcome {
            Ok(detail) => println!("criterion {} PASS {name}: {detail} [{elapsed:.2?}]", i + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {} FAIL {name}: {detail} [{elapsed:.2?}]", i + 1);
            }
        }
    }
    let total = suite_start.elapsed();
    let within_budget = total < Duration::from_secs(300);
    println!(
        "suite runtime {total:.2?} ({})",
        if within_budget {
            "within 5 min"
        } else {
            "over 5 min"
        }
    );
    if failures > 0 || !within_budget {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
