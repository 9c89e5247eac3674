//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails. Pass criterion numbers as arguments to run a
//! subset, e.g. `cargo test --test acceptance -- 1 3`.

use std::collections::HashMap;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use qdec::ansatz::{AnsatzConfig, ParameterSet};
use qdec::baselines::{min_weight_perfect_matching, MldTable};
use qdec::bits::{BitVec, Syndrome};
use qdec::dem::{
    build_repetition_dem, extract_matching_graph, parse_dem, CodeFamily, CodeSpec, DetectorErrorModel, ErrorMechanism,
    NoiseKind,
};
use qdec::sampler::{sample_shots, split_train_test};
use qdec::selfcorrect::{all_patterns, equivalence_check, run_selfcorrect, ClassicalPipeline, SelfCorrectConfig};
use qdec::simulator::{loss_and_gradient, outcome_distribution};
use qdec::trainer::{evaluate, init_params, predict, train, PredictMode, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

const SURFACE_FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/surface_d3_r4_p0.001.dem");

fn binomial_se(rate: f64, n: usize) -> f64 {
    (rate * (1.0 - rate) / n as f64).sqrt()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_syndrome(rng: &mut ChaCha8Rng, m: usize) -> Syndrome {
    let bits: Vec<bool> = (0..m).map(|_| rng.random_bool(0.5)).collect();
    BitVec::from_bools(&bits)
}

fn random_params(rng: &mut ChaCha8Rng, config: &AnsatzConfig, scale: f64) -> ParameterSet {
    let mut params = ParameterSet::zeros_for(config);
    for v in params.theta.iter_mut().chain(params.phi.iter_mut()) {
        *v = rng.random_range(-scale..scale);
    }
    params
}

fn gradient_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6ead);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let q = rng.random_range(1..=4);
        let b = rng.random_range(1..=3);
        let m = rng.random_range(1..=5);
        let l = rng.random_range(1..=q);
        let config = AnsatzConfig::new(q, b, m, l).unwrap();
        let params = random_params(&mut rng, &config, std::f64::consts::PI);
        let mut syndrome = random_syndrome(&mut rng, m);
        if syndrome.is_zero() {
            syndrome.set(rng.random_range(0..m), true);
        }
        let label = BitVec::from_u64(rng.random_range(0..1u64 << l), l);
        let (_, grad) = loss_and_gradient(&config, &params, &syndrome, &label).unwrap();

        let loss_at = |p: &ParameterSet| loss_and_gradient(&config, p, &syndrome, &label).unwrap().0;
        let mut diff_sq = 0.0;
        let mut fd_sq = 0.0;
        let mut an_sq = 0.0;
        for which in 0..2 {
            for k in 0..params.theta.len() {
                let mut plus = params.clone();
                let mut minus = params.clone();
                let (vp, vm, g) = if which == 0 {
                    (&mut plus.theta[k], &mut minus.theta[k], grad.theta[k])
                } else {
                    (&mut plus.phi[k], &mut minus.phi[k], grad.phi[k])
                };
                *vp += h;
                *vm -= h;
                let fd = (loss_at(&plus) - loss_at(&minus)) / (2.0 * h);
                diff_sq += (g - fd).powi(2);
                fd_sq += fd * fd;
                an_sq += g * g;
            }
        }
        let scale = fd_sq.sqrt().max(an_sq.sqrt());
        let rel = if scale == 0.0 { 0.0 } else { diff_sq.sqrt() / scale };
        worst = worst.max(rel);
    }
    check(
        worst <= 1e-5,
        format!("200 instances, worst relative error {worst:.2e} (tolerance 1e-5)"),
    )
}

/// Graph-like random model: every mechanism touches one or two detectors.
fn random_model(rng: &mut ChaCha8Rng) -> DetectorErrorModel {
    let m = rng.random_range(1..=4);
    let l = rng.random_range(1..=2);
    let e = rng.random_range(1..=10);
    let mechanisms = (0..e)
        .map(|_| {
            let a = rng.random_range(0..m as u32);
            let mut dets = vec![a];
            if m > 1 && rng.random_bool(0.6) {
                let mut b = rng.random_range(0..m as u32);
                while b == a {
                    b = rng.random_range(0..m as u32);
                }
                dets.push(b);
            }
            let obs: Vec<u32> = (0..l as u32).filter(|_| rng.random_bool(0.3)).collect();
            ErrorMechanism::new(rng.random_range(0.01..0.3), &dets, &obs).unwrap()
        })
        .collect();
    DetectorErrorModel::new(m, l, mechanisms).unwrap()
}

/// Exact joint distribution of (syndrome, label) by enumerating every subset
/// of mechanisms.
fn enumerate_joint(model: &DetectorErrorModel) -> HashMap<(u64, u64), f64> {
    let mechs = model.mechanisms();
    let mut joint = HashMap::new();
    for subset in 0u64..1 << mechs.len() {
        let mut prob = 1.0;
        let (mut syn, mut obs) = (0u64, 0u64);
        for (k, mech) in mechs.iter().enumerate() {
            if subset >> k & 1 == 1 {
                prob *= mech.probability;
                syn ^= mech.detectors.iter().fold(0, |acc, &d| acc ^ 1u64 << d);
                obs ^= mech.observable_mask();
            } else {
                prob *= 1.0 - mech.probability;
            }
        }
        *joint.entry((syn, obs)).or_insert(0.0) += prob;
    }
    joint
}

fn brute_force_matching(cost: &dyn Fn(usize, usize) -> f64, nodes: &mut Vec<usize>) -> f64 {
    if nodes.is_empty() {
        return 0.0;
    }
    let first = nodes.remove(0);
    let mut best = f64::INFINITY;
    for k in 0..nodes.len() {
        let partner = nodes.remove(k);
        let c = cost(first, partner) + brute_force_matching(cost, nodes);
        best = best.min(c);
        nodes.insert(k, partner);
    }
    nodes.insert(0, first);
    best
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0_ac1e);
    let shots = 200_000;
    let mut worst_tv: f64 = 0.0;
    let mut worst_gap = f64::INFINITY;
    let mut matchings = 0usize;
    let mut problems = Vec::new();
    for trial in 0..50 {
        let model = random_model(&mut rng);
        let joint = enumerate_joint(&model);

        // (a) sampler against enumeration
        let sampled = sample_shots(&model, shots, 1000 + trial).unwrap();
        let mut counts: HashMap<(u64, u64), usize> = HashMap::new();
        for shot in sampled.shots() {
            *counts.entry((shot.syndrome.to_u64(), shot.label.to_u64())).or_insert(0) += 1;
        }
        let mut tv = 0.0;
        for (key, &p) in &joint {
            let emp = counts.get(key).copied().unwrap_or(0) as f64 / shots as f64;
            tv += (emp - p).abs();
        }
        tv += counts
            .iter()
            .filter(|(k, _)| !joint.contains_key(k))
            .map(|(_, &c)| c as f64 / shots as f64)
            .sum::<f64>();
        worst_tv = worst_tv.max(tv / 2.0);

        // (b) MWPM against MLD over the exact syndrome distribution
        let graph = extract_matching_graph(&model).unwrap();
        let m = model.num_detectors();
        let mut per_syndrome: HashMap<u64, Vec<(u64, f64)>> = HashMap::new();
        for (&(s, l), &p) in &joint {
            per_syndrome.entry(s).or_default().push((l, p));
        }
        let (mut mld_err, mut mwpm_err) = (0.0, 0.0);
        for (&s, row) in &per_syndrome {
            let total: f64 = row.iter().map(|(_, p)| p).sum();
            let best = row.iter().map(|&(_, p)| p).fold(0.0, f64::max);
            mld_err += total - best;
            let predicted = graph.decode_mask(&BitVec::from_u64(s, m)).ok();
            mwpm_err += row
                .iter()
                .filter(|(l, _)| Some(*l) != predicted)
                .map(|(_, p)| p)
                .sum::<f64>();
        }
        let table_err = MldTable::build(&model).unwrap().expected_error(|s| {
            let row = &per_syndrome[&s.to_u64()];
            let best = row.iter().map(|&(_, p)| p).fold(0.0, f64::max);
            row.iter().find(|&&(_, p)| p == best).unwrap().0
        });
        if (table_err - mld_err).abs() > 1e-12 {
            problems.push(format!(
                "model {trial}: MLD table error {table_err} vs enumeration {mld_err}"
            ));
        }
        worst_gap = worst_gap.min(mwpm_err - mld_err);

        // (c) subset DP against brute force on every syndrome of the model
        for s in 1u64..1 << m {
            let mut nodes: Vec<usize> = (0..m).filter(|&i| s >> i & 1 == 1).collect();
            if nodes.len() % 2 == 1 {
                nodes.push(graph.boundary());
            }
            let cost = |i: usize, j: usize| graph.distance(i, j);
            let dp = min_weight_perfect_matching(nodes.len(), |i, j| cost(nodes[i], nodes[j]))
                .map_or(f64::INFINITY, |(c, _)| c);
            let brute = brute_force_matching(&cost, &mut nodes.clone());
            let same = (dp.is_infinite() && brute.is_infinite()) || (dp - brute).abs() <= 1e-12 * brute.abs().max(1.0);
            if !same {
                problems.push(format!("model {trial} syndrome {s:b}: DP {dp} vs brute force {brute}"));
            }
            matchings += 1;
        }
    }
    // (c) also on larger instances with integer costs, where sums are exact
    for _ in 0..50 {
        let k = 2 * rng.random_range(1..=6);
        let w: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..k).map(|_| rng.random_range(1..100) as f64).collect())
            .collect();
        let cost = |i: usize, j: usize| w[i.min(j)][i.max(j)];
        let dp = min_weight_perfect_matching(k, cost).unwrap().0;
        let brute = brute_force_matching(&cost, &mut (0..k).collect());
        if dp != brute {
            problems.push(format!("{k}-node integer instance: DP {dp} vs brute force {brute}"));
        }
        matchings += 1;
    }
    let detail = format!(
        "50 models; worst TV {worst_tv:.4} (tolerance 0.01); min MWPM-MLD expected-error gap {worst_gap:.3e}; {matchings} matchings compared"
    );
    if !problems.is_empty() {
        return Err(format!("{detail}; {}", problems.join("; ")));
    }
    check(worst_tv <= 0.01 && worst_gap >= -1e-12, detail)
}

fn zero_syndrome_invariant() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e70);
    let mut worst: f64 = 0.0;
    let mut wrong = 0;
    for k in 0..100 {
        let q = rng.random_range(1..=6);
        let b = rng.random_range(1..=5);
        let m = rng.random_range(1..=8);
        let l = rng.random_range(1..=q);
        let config = AnsatzConfig::new(q, b, m, l).unwrap();
        let params = random_params(&mut rng, &config, 10.0);
        let zero = Syndrome::zeros(m);
        let dist = outcome_distribution(&config, &params, &zero).unwrap();
        worst = worst.max((dist.probs[0] - 1.0).abs());
        for mode in [PredictMode::Argmax, PredictMode::Sample { seed: k }] {
            if !predict(&params, &config, &zero, mode).unwrap().is_zero() {
                wrong += 1;
            }
        }
    }
    check(
        worst <= 1e-10 && wrong == 0,
        format!("100 parameter sets, max |q(0|0) - 1| = {worst:.1e}, {wrong} nonzero predictions"),
    )
}

fn training_config(epochs: usize, seed: u64) -> TrainConfig {
    TrainConfig {
        epochs,
        eval_every: 50,
        seed,
        ..TrainConfig::default()
    }
}

fn repetition_training() -> Outcome {
    let spec = CodeSpec {
        family: CodeFamily::Repetition,
        distance: 3,
        rounds: 2,
        noise: NoiseKind::CircuitLevel,
        p: 0.05,
    };
    let model = build_repetition_dem(&spec).unwrap();
    let shots = sample_shots(&model, 30_000, 404).unwrap();
    let (train_set, test_set) = split_train_test(&shots, 20_000.0 / 30_000.0).unwrap();
    assert_eq!((train_set.len(), test_set.len()), (20_000, 10_000));
    let config = AnsatzConfig::new(3, 10, model.num_detectors(), 1).unwrap();
    let outcome = train(&model, &config, &train_set, &test_set, &training_config(500, 7)).unwrap();
    let trained = evaluate(&outcome.final_params, &config, test_set.shots())
        .unwrap()
        .logical_error_rate();
    let mld = MldTable::build(&model).unwrap().logical_error_rate(&test_set).unwrap();
    let sigma = binomial_se(mld, test_set.len());
    check(
        (trained - mld).abs() <= 2.0 * sigma,
        format!(
            "500 epochs: trained test LER {trained:.4}, MLD {mld:.4}, 2 sigma {:.4}",
            2.0 * sigma
        ),
    )
}

fn surface_vs_mwpm() -> Outcome {
    let text = fs::read_to_string(SURFACE_FIXTURE).map_err(|e| format!("reading fixture: {e}"))?;
    let model = parse_dem(&text).map_err(|e| e.to_string())?;
    let shots = sample_shots(&model, 100_000, 2024).unwrap();
    let (train_set, test_set) = split_train_test(&shots, 0.5).unwrap();
    let config = AnsatzConfig::new(3, 10, model.num_detectors(), 1).unwrap();
    let outcome = train(&model, &config, &train_set, &test_set, &training_config(2_000, 7)).unwrap();
    let trained = evaluate(&outcome.final_params, &config, test_set.shots())
        .unwrap()
        .logical_error_rate();
    let graph = extract_matching_graph(&model).unwrap();
    let stats = qdec::baselines::mwpm_logical_error_rate(&graph, &test_set).unwrap();
    let mwpm = stats.logical_error_rate();
    let sigma = binomial_se(mwpm, test_set.len());
    check(
        trained <= mwpm + 2.0 * sigma,
        format!(
            "2000 epochs: trained test LER {trained:.5}, MWPM {mwpm:.5} ({} failures), 2 sigma {:.5}",
            stats.failures,
            2.0 * sigma
        ),
    )
}

fn self_correction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e1f);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let blocks = rng.random_range(1..=4);
        let layout = SelfCorrectConfig::new(blocks, ParameterSet::zeros(2, blocks, 2), 0.05, 1, 0);
        let params = random_params(&mut rng, &layout.classical_ansatz(), std::f64::consts::PI);
        let cfg = SelfCorrectConfig {
            params: params.clone(),
            ..layout
        };
        let classical = ClassicalPipeline {
            ansatz: cfg.classical_ansatz(),
            params,
        };
        let report = equivalence_check(&cfg, &classical).unwrap();
        assert_eq!(report.rows.len(), all_patterns().count());
        worst = worst.max(report.max_abs_diff);
    }

    // Classical decoder for the two-check code, read out on the control qubit.
    let p = 0.05;
    let spec = CodeSpec {
        family: CodeFamily::Repetition,
        distance: 3,
        rounds: 1,
        noise: NoiseKind::CodeCapacity,
        p,
    };
    let model = build_repetition_dem(&spec).unwrap();
    let blocks = 2;
    let mut ansatz = AnsatzConfig::new(2, blocks, 2, 1).unwrap();
    ansatz.readout = vec![1];
    let shots = sample_shots(&model, 6_000, 66).unwrap();
    let (train_set, test_set) = split_train_test(&shots, 0.5).unwrap();
    let cfg = TrainConfig {
        epochs: 60,
        batch_size: 64,
        learning_rate: 0.05,
        init_scale: 0.5,
        eval_every: 20,
        seed: 3,
        ..TrainConfig::default()
    };
    let start = init_params(&ansatz, cfg.init_scale, cfg.seed).unwrap();
    let outcome = qdec::trainer::train_from(&model, &ansatz, &train_set, &test_set, &cfg, start).unwrap();
    let sc = SelfCorrectConfig::new(blocks, outcome.final_params.clone(), p, 20_000, 99);
    let trained_report = equivalence_check(
        &sc,
        &ClassicalPipeline {
            ansatz: ansatz.clone(),
            params: outcome.final_params.clone(),
        },
    )
    .unwrap();
    worst = worst.max(trained_report.max_abs_diff);
    let result = run_selfcorrect(&sc).unwrap();
    let sigma = result.std_error.hypot(result.raw_std_error);
    let gap = result.raw_flip_rate - result.logical_error_rate;
    check(
        worst <= 1e-9 && gap >= 2.0 * sigma,
        format!(
            "max coherent/classical gap {worst:.1e} (tolerance 1e-9); 20000 trajectories at p=0.05: corrected {:.4} vs uncorrected {:.4}, difference {gap:.4} >= 2 sigma {:.4}",
            result.logical_error_rate,
            result.raw_flip_rate,
            2.0 * sigma
        ),
    )
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_qdec"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "qdec {}: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr)
        ))
    }
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    run_cli(&[
        "gen-dem",
        "--family",
        "repetition",
        "--distance",
        "3",
        "--rounds",
        "2",
        "--p",
        "0.05",
        "--out",
        &path("d.dem"),
    ])?;
    run_cli(&[
        "sample",
        "--dem",
        &path("d.dem"),
        "--shots",
        "3000",
        "--seed",
        "17",
        "--out",
        &path("train.01"),
        "--split",
        "0.5",
        "--test-out",
        &path("test.01"),
    ])?;
    let mut runs = Vec::new();
    for workers in ["1", "4"] {
        for rep in 0..2 {
            let out = path(&format!("run-w{workers}-{rep}"));
            run_cli(&[
                "train",
                "--dem",
                &path("d.dem"),
                "--train",
                &path("train.01"),
                "--test",
                &path("test.01"),
                "--qubits",
                "3",
                "--blocks",
                "4",
                "--epochs",
                "15",
                "--batch-size",
                "64",
                "--eval-every",
                "5",
                "--seed",
                "23",
                "--timing",
                "off",
                "--workers",
                workers,
                "--out-dir",
                &out,
            ])?;
            runs.push(out);
        }
    }
    let read = |dir: &str, file: &str| fs::read(Path::new(dir).join(file)).map_err(|e| format!("{dir}/{file}: {e}"));
    let mut mismatches = Vec::new();
    for file in ["trace.csv", "best.ckpt", "final.ckpt"] {
        let reference = read(&runs[0], file)?;
        for other in &runs[1..] {
            if read(other, file)? != reference {
                mismatches.push(format!("{file} differs in {other}"));
            }
        }
    }
    check(
        mismatches.is_empty(),
        if mismatches.is_empty() {
            "4 train runs (workers 1 and 4, twice each): trace.csv, best.ckpt, final.ckpt byte-identical".into()
        } else {
            mismatches.join("; ")
        },
    )
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 7] = [
        (1, "gradient correctness", gradient_correctness),
        (2, "oracle equivalence", oracle_equivalence),
        (3, "zero-syndrome invariant", zero_syndrome_invariant),
        (4, "repetition-code training vs MLD", repetition_training),
        (5, "surface code d=3 vs MWPM", surface_vs_mwpm),
        (6, "self-correction equivalence", self_correction),
        (7, "training determinism", determinism),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (n, name, run) in criteria {
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let started = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {n} ({name}): PASS [{secs:.1}s] {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n} ({name}): FAIL [{secs:.1}s] {detail}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
