//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fail.
//!
//! Runs without the libtest harness so the lines always print.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use lra_core::assignment::{
    focal_cost, hungarian, simulate_grid, CostMatrix, FocalParams, Scenario, ScenarioGrid,
};
use lra_core::codec::{decode, encode};
use lra_core::geometry::{canonicalize, Canonicalization, Point};
use lra_core::robustness::{
    codec_comparison, derive_seed, dim_sweep, fit_basis, generalization_check, generate_ribbons,
    linear_ensemble, load_corpus, noise_benchmark, CorpusSpec, EvalSettings, LinearEnsembleSpec,
    NoiseSpec, RibbonFamily,
};
use lra_core::subspace::{
    build_matrix, fms_subspace, l12_objective, subspace_distance, svd_subspace, Basis,
    ContourMatrix, FitMethod, FmsParams,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("orthonormality and round trip", orthonormality_round_trip),
        ("exact-rank recovery", exact_rank_recovery),
        ("IRLS descent", irls_descent),
        ("robustness ordering", robustness_ordering),
        ("dimension monotonicity", dimension_monotonicity),
        ("Fourier comparison", fourier_comparison),
        ("Hungarian oracle equivalence", hungarian_oracle),
        ("cost-matrix fidelity", cost_fidelity),
        ("generalization gap", generalization_gap),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = run();
        if !ok {
            failed += 1;
        }
        println!(
            "{} criterion {}: {name}: {detail} [{:.1}s]",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

fn orthonormality_round_trip() -> Outcome {
    let start = Instant::now();
    let (mut ortho, mut round, mut idem) = (0.0f64, 0.0f64, 0.0f64);
    for seed in 0..50 {
        let contours = generate_ribbons(RibbonFamily::Curved, 60, 14, seed).unwrap();
        let a = build_matrix(&contours, Canonicalization::default()).unwrap();
        for (m, method) in [
            (14, FitMethod::Svd),
            (14, FitMethod::Fms),
            (28, FitMethod::Fms),
        ] {
            let (b, _) = fit_basis(&a, m, method, &FmsParams::default(), "acceptance").unwrap();
            let u = b.basis.matrix();
            // independent check of UᵀU = I
            ortho = ortho.max(max_abs(&(u.transpose() * u - DMatrix::identity(m, m))));
            let p = u * u.transpose();
            for c in &contours {
                if m == 28 {
                    let back = decode(&b, &encode(&b, c).unwrap()).unwrap();
                    for (q, r) in back.points().iter().zip(c.points()) {
                        round = round.max((q.x - r.x).abs()).max((q.y - r.y).abs());
                    }
                }
                let (canon, _) = canonicalize(c, Canonicalization::default()).unwrap();
                let x = DVector::from_vec(canon.to_flat());
                let px = &p * x;
                idem = idem.max((&p * &px - &px).amax());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    (
        ortho < 1e-9 && round < 1e-9 && idem < 1e-9 && secs < 30.0,
        format!(
            "max |UᵀU−I| {ortho:.1e}, round trip {round:.1e}, idempotence {idem:.1e}, {secs:.1}s"
        ),
    )
}

fn exact_rank_recovery() -> Outcome {
    let spec = LinearEnsembleSpec {
        noise_sigma: 0.0,
        outlier_fraction: 0.0,
        ..LinearEnsembleSpec::default()
    };
    let raw = Canonicalization {
        center: false,
        normalize_scale: false,
    };
    let mut worst = (0.0f64, 0.0f64, 0usize, 0.0f64);
    for seed in 0..5 {
        let e = linear_ensemble(&spec, seed).unwrap();
        let a = ContourMatrix::from_columns(e.data.clone(), raw).unwrap();
        let truth = Basis::new(e.truth.clone(), FitMethod::Svd, raw, 1e-9).unwrap();
        let svd = svd_subspace(&a, 6).unwrap();
        let fms = fms_subspace(&a, 6, &FmsParams::default()).unwrap();
        for b in [&svd, &fms.basis] {
            worst.0 = worst.0.max(subspace_distance(b, &truth).unwrap());
            worst.1 = worst.1.max(l12_objective(&a, b).unwrap());
            // independent: largest residual of the truth generator outside the fitted span
            let u = b.matrix();
            let off = &e.truth - u * (u.transpose() * &e.truth);
            worst.3 = worst.3.max(off.amax());
        }
        worst.2 = worst.2.max(fms.iterations);
    }
    let (dist, l12, iters, off) = worst;
    (
        dist < 1e-6 && l12 < 1e-6 && iters <= 2 && off < 1e-6,
        format!(
            "distance {dist:.1e}, l12 {l12:.1e}, FMS iterations {iters}, truth residual {off:.1e}"
        ),
    )
}

fn irls_descent() -> Outcome {
    let raw = Canonicalization {
        center: false,
        normalize_scale: false,
    };
    let mut worst_rise = f64::NEG_INFINITY;
    let mut worst_final = 0.0f64;
    for seed in 0..20 {
        let e = linear_ensemble(&LinearEnsembleSpec::default(), 100 + seed).unwrap();
        let a = ContourMatrix::from_columns(e.data.clone(), raw).unwrap();
        let fit = fms_subspace(&a, 6, &FmsParams::default()).unwrap();
        for w in fit.trace.windows(2) {
            worst_rise = worst_rise.max(w[1].objective - w[0].objective);
        }
        // recompute the last recorded objective directly
        let u = fit.basis.matrix();
        let resid = &e.data - u * (u.transpose() * &e.data);
        let direct: f64 = resid.column_iter().map(|c| c.norm()).sum();
        worst_final = worst_final.max((direct - fit.objective()).abs() / direct);
    }
    (
        worst_rise <= 1e-7 && worst_final < 1e-9,
        format!(
            "largest step increase {worst_rise:.2e}, trace vs direct objective {worst_final:.1e}"
        ),
    )
}

fn ribbon_corpus(family: RibbonFamily, seed: u64, label: &str) -> lra_core::robustness::Corpus {
    load_corpus(&CorpusSpec::synthetic(
        family,
        500,
        derive_seed(seed, label),
    ))
    .unwrap()
}

fn robustness_ordering() -> Outcome {
    let settings = EvalSettings::default();
    let mut wins = 0;
    let mut gaps = Vec::new();
    for seed in 0..20 {
        let corpus = ribbon_corpus(RibbonFamily::Curved, seed, "corpus");
        let noise = NoiseSpec {
            seed: derive_seed(seed, "noise"),
            ..NoiseSpec::default()
        };
        let r = noise_benchmark(&corpus, &noise, 14, &settings).unwrap();
        let (svd, fms) = (r.summary["svd_drop"], r.summary["fms_drop"]);
        if fms < svd {
            wins += 1;
        }
        gaps.push(svd - fms);
    }
    let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
    (
        wins >= 18 && mean >= 1.0,
        format!("FMS drop smaller in {wins}/20 seeds, mean drop difference {mean:.2} points"),
    )
}

fn dimension_monotonicity() -> Outcome {
    let corpus = ribbon_corpus(RibbonFamily::Curved, 0, "corpus");
    let dims = [6, 10, 14, 18, 28];
    let r = match dim_sweep(&corpus, &dims, FitMethod::Svd, &EvalSettings::default()) {
        Ok(r) => r,
        Err(e) => return (false, e.to_string()),
    };
    let err: Vec<f64> = r
        .rows
        .iter()
        .map(|row| row.mean_sq_error.unwrap())
        .collect();
    let iou: Vec<f64> = r.rows.iter().map(|row| row.iou.unwrap().mean).collect();
    let monotone = err.windows(2).all(|w| w[1] <= w[0]);
    let ladder: Vec<String> = dims
        .iter()
        .zip(&iou)
        .map(|(d, v)| format!("M{d} {v:.4}"))
        .collect();
    (
        monotone && iou[4] >= 0.999 && iou[2] - iou[0] >= 0.02,
        format!(
            "error non-increasing: {monotone}; IoU {}",
            ladder.join(", ")
        ),
    )
}

fn fourier_comparison() -> Outcome {
    let corpus = ribbon_corpus(RibbonFamily::Extreme, 0, "corpus");
    let r = codec_comparison(&corpus, 14, FitMethod::Fms, &EvalSettings::default()).unwrap();
    let (lra, fourier) = (r.summary["lra_iou"], r.summary["fourier_iou"]);
    (
        lra >= fourier,
        format!("LRA {lra:.4} vs Fourier {fourier:.4} at dim 14"),
    )
}

fn brute_force(cost: &[f64], rows: usize, cols: usize) -> f64 {
    fn go(cost: &[f64], rows: usize, cols: usize, col: usize, used: &mut [bool]) -> f64 {
        if col == cols {
            return 0.0;
        }
        let mut best = f64::INFINITY;
        for r in 0..rows {
            if !used[r] {
                used[r] = true;
                best = best.min(cost[r * cols + col] + go(cost, rows, cols, col + 1, used));
                used[r] = false;
            }
        }
        best
    }
    go(cost, rows, cols, 0, &mut vec![false; rows])
}

fn hungarian_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let cols = rng.random_range(1..=7);
        let rows = rng.random_range(cols..=7);
        // integer costs keep every partial sum exact
        let entries: Vec<f64> = (0..rows * cols)
            .map(|_| rng.random_range(0..1000) as f64)
            .collect();
        let cm = CostMatrix::from_entries(rows, 1, cols, entries.clone()).unwrap();
        let a = hungarian(&cm).unwrap();
        let direct: f64 = a
            .pairs
            .iter()
            .map(|p| entries[p.row * cols + p.column])
            .sum();
        if a.total_cost != brute_force(&entries, rows, cols)
            || direct != a.total_cost
            || !a.is_complete()
        {
            mismatches += 1;
        }
    }
    let example = [1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 3.0, 6.0, 9.0];
    let total = hungarian(&CostMatrix::from_entries(3, 1, 3, example.to_vec()).unwrap())
        .unwrap()
        .total_cost;
    (
        mismatches == 0 && total == 10.0,
        format!("{mismatches}/1000 mismatches against brute force; worked example total {total}"),
    )
}

fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Vec<Point> {
    vec![
        Point::new(x0, y0),
        Point::new(x1, y0),
        Point::new(x1, y1),
        Point::new(x0, y1),
    ]
}

fn cost_fidelity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut worst = 0.0f64;
    for case in 0..100 {
        let (h, w) = (rng.random_range(3..=8usize), rng.random_range(3..=8usize));
        let t = rng.random_range(1..=3);
        let gts = (0..t)
            .map(|_| {
                let x0 = rng.random_range(0.0..w as f64 - 1.5);
                let y0 = rng.random_range(0.0..h as f64 - 1.5);
                rect(
                    x0,
                    y0,
                    x0 + rng.random_range(1.0..2.5),
                    y0 + rng.random_range(0.6..1.5),
                )
            })
            .collect();
        let s = Scenario {
            grid: ScenarioGrid { h, w },
            gts,
            score_noise: 0.1,
            contour_noise: 0.15,
            k: rng.random_range(1..=3),
            lambda: rng.random_range(0.5..3.0),
            seed: case,
            n_vertices: 14,
            norm: Default::default(),
            focal: FocalParams::default(),
        };
        let sim = simulate_grid(&s).unwrap();
        let cm = sim.cost_matrix().unwrap();
        for i in 0..h * w {
            for c in 0..cm.cols() {
                let got = cm.get(i, c);
                if !sim.grid.text_region()[i] {
                    if got != 1e18 {
                        worst = f64::INFINITY;
                    }
                    continue;
                }
                let b = sim.grid.scores()[i].clamp(1e-7, 1.0 - 1e-7);
                let fl = -0.25 * (1.0 - b) * (1.0 - b) * b.ln() + 0.75 * b * b * (1.0 - b).ln();
                let reg: f64 = sim.grid.contours()[i]
                    .points()
                    .iter()
                    .zip(sim.gts[c / s.k].points())
                    .map(|(p, g)| (p.x - g.x).hypot(p.y - g.y))
                    .sum();
                worst = worst.max((got - (fl + s.lambda * reg)).abs());
            }
        }
    }
    let p = FocalParams::default();
    let half = focal_cost(0.5, &p).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(56);
    let mut violations = 0;
    for _ in 0..10_000 {
        let (x, y): (f64, f64) = (
            rng.random_range(1e-6..1.0 - 1e-6),
            rng.random_range(1e-6..1.0 - 1e-6),
        );
        let (lo, hi) = if x < y { (x, y) } else { (y, x) };
        if lo != hi && focal_cost(lo, &p).unwrap() <= focal_cost(hi, &p).unwrap() {
            violations += 1;
        }
    }
    (
        worst < 1e-10 && (half + 0.0866).abs() < 1e-4 && violations == 0,
        format!("max entry deviation {worst:.1e}; focal(0.5) = {half:.5}; {violations} monotonicity violations in 10000 pairs"),
    )
}

fn generalization_gap() -> Outcome {
    let fit = ribbon_corpus(RibbonFamily::Curved, 0, "corpus");
    let held = ribbon_corpus(RibbonFamily::Curved, 0, "eval_corpus");
    let r =
        generalization_check(&fit, &held, 14, FitMethod::Fms, &EvalSettings::default()).unwrap();
    let (ins, out) = (r.summary["in_sample_iou"], r.summary["held_out_iou"]);
    let gap = (ins - out).abs() * 100.0;
    (
        gap < 1.0,
        format!("in-sample {ins:.4}, held-out {out:.4}, gap {gap:.3} points"),
    )
}

fn lra(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_lra"))
        .args(args)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("scenario.json");
    std::fs::write(
        &scenario,
        r#"{"grid": {"h": 6, "w": 8}, "gts": [[[0.2,0.2],[3.8,0.2],[3.8,1.8],[0.2,1.8]], [[4.3,3.2],[7.8,3.2],[7.8,5.7],[4.3,5.7]]], "score_noise": 0.05, "contour_noise": 0.1, "seed": 4}"#,
    )
    .unwrap();
    // identical command lines, outputs overwritten in place; payloads snapshotted after each run
    let d = dir.path().join("out");
    std::fs::create_dir(&d).unwrap();
    let run = || -> Vec<(String, Vec<u8>)> {
        let s = |p: &Path| p.to_str().unwrap().to_string();
        let basis = s(&d.join("basis.json"));
        let small = ["--set", "count=150", "--set", "resolution=256"];
        let steps: Vec<Vec<String>> = vec![
            vec!["fit".into(), "--out".into(), basis.clone()],
            vec![
                "eval".into(),
                "--basis".into(),
                basis.clone(),
                "--out".into(),
                s(&d.join("eval")),
            ],
            vec![
                "encode".into(),
                "--basis".into(),
                basis.clone(),
                "--out".into(),
                s(&d.join("codes.jsonl")),
            ],
            vec!["sweep".into(), "--out".into(), s(&d.join("sweep"))],
            vec!["noise".into(), "--out".into(), s(&d.join("noise"))],
            vec!["generalize".into(), "--out".into(), s(&d.join("gen"))],
            vec![
                "inspect-basis".into(),
                "--basis".into(),
                basis.clone(),
                "--out".into(),
                s(&d.join("imp")),
            ],
        ];
        for mut step in steps {
            step.extend(small.iter().map(|x| x.to_string()));
            let args: Vec<&str> = step.iter().map(String::as_str).collect();
            assert!(lra(&args), "{args:?} failed");
        }
        assert!(lra(&[
            "assign-sim",
            "--scenario",
            &s(&scenario),
            "--out",
            &s(&d.join("assign.json"))
        ]));
        let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(&d)
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| !p.to_str().unwrap().ends_with(".log"))
            .map(|p| {
                (
                    p.file_name().unwrap().to_str().unwrap().to_string(),
                    std::fs::read(&p).unwrap(),
                )
            })
            .collect();
        files.sort();
        files
    };
    let a = run();
    let b = run();
    let differing: Vec<&str> = a
        .iter()
        .zip(&b)
        .filter(|(x, y)| x != y)
        .map(|(x, _)| x.0.as_str())
        .collect();
    (
        a.len() == b.len() && a.len() >= 10 && differing.is_empty(),
        format!(
            "{} payload files compared, differing: {:?}",
            a.len(),
            differing
        ),
    )
}
