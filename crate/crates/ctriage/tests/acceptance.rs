//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Run with `cargo test --test acceptance`.

mod common;

use std::num::NonZeroUsize;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use ctriage::pipeline::{Pipeline, PipelineConfig};
use ctriage::report::read_report;
use ctriage::volume_io::write_volume;
use ctriage_core::metrics::ConfusionMatrix;
use ctriage_core::mock::MockStage2;
use ctriage_core::ops::{dense, global_average_pool, sigmoid, softmax, DenseLayer, FeatureMap};
use ctriage_core::{
    make_slice_tensor, select_middle_slices, vote, window_hu, Class, ClassTally, CtVolume,
    Ratio, VoteCounts, VoteWeights, WindowSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("windowing oracle", windowing_oracle),
        ("slice selection", slice_selection),
        ("vote oracle", vote_oracle),
        ("reference ops", reference_ops),
        ("end-to-end determinism", end_to_end),
        ("metrics", metrics),
        ("latency budget", latency),
    ];
    let mut failures = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failures} failed",
        criteria.len() - failures
    );
    if failures > 0 {
        std::process::exit(1);
    }
}

// windowing

/// Integer-only lung window: round((hu + 1150) * 255 / 1300), half up.
fn window_oracle(hu: i32) -> u8 {
    const LO: i32 = -1150;
    const WIDTH: i32 = 1300;
    if hu <= LO {
        return 0;
    }
    if hu >= LO + WIDTH {
        return 255;
    }
    let q = (hu - LO) * 255;
    ((2 * q + WIDTH) / (2 * WIDTH)) as u8
}

fn windowing_oracle() -> Outcome {
    let spec = WindowSpec::default();
    let start = Instant::now();
    let mut checked = 0u32;
    for hu in i16::MIN..=i16::MAX {
        let got = window_hu(hu, &spec);
        let want = window_oracle(hu.into());
        ensure(got == want, || format!("hu {hu}: got {got}, oracle {want}"))?;
        checked += 1;
    }
    let elapsed = start.elapsed();
    for (hu, want) in [(-1150, 0), (150, 255), (-500, 128)] {
        let got = window_hu(hu, &spec);
        ensure(got == want, || format!("boundary {hu} -> {got}, expected {want}"))?;
    }
    ensure(elapsed < Duration::from_secs(1), || {
        format!("sweep took {elapsed:?}")
    })?;
    Ok(format!(
        "{checked} HU values exact, boundaries -1150->0 150->255 -500->128, {elapsed:.2?}"
    ))
}

// slice selection

fn slice_selection() -> Outcome {
    for n in 1..500usize {
        let w = select_middle_slices(NonZeroUsize::new(n).unwrap());
        let len = w.end - w.start;
        let expected_len = if n >= 80 {
            80
        } else if n >= 40 {
            40
        } else {
            n
        };
        ensure(len == expected_len, || format!("n={n}: length {len}"))?;
        ensure(w.range().count() == len && w.end <= n, || format!("n={n}: not contiguous in range"))?;
        let (lead, trail) = (w.start, n - w.end);
        ensure(lead <= trail && trail - lead <= 1, || {
            format!("n={n}: margins {lead}/{trail}")
        })?;
    }
    for (n, start, end) in [(100, 10, 90), (60, 10, 50), (81, 0, 80), (80, 0, 80)] {
        let w = select_middle_slices(NonZeroUsize::new(n).unwrap());
        ensure(w.range() == (start..end), || {
            format!("n={n}: got {:?}, expected {start}..{end}", w.range())
        })?;
    }
    Ok("n in 1..500 length/contiguity/centering, 100->[10,90) 60->[10,50) 81->[0,80) 80->[0,80)".into())
}

// vote

fn counts(c: [u32; 6]) -> VoteCounts {
    VoteCounts {
        central: ClassTally { covid19: c[0], cap: c[2], normal: c[4] },
        peripheral: ClassTally { covid19: c[1], cap: c[3], normal: c[5] },
    }
}

/// Scores in tenths with the default weights; argmax by exhaustive scan in
/// priority order COVID-19, CAP, Normal.
fn vote_oracle_label(c: [u32; 6]) -> (Class, [u64; 3]) {
    let [x, xp, y, yp, z, zp] = c.map(u64::from);
    let scores = [10 * x + 7 * xp, 10 * y + 7 * yp, 10 * z + 5 * zp];
    let best = *scores.iter().max().unwrap();
    let order = [Class::Covid19, Class::Cap, Class::Normal];
    let label = order
        .into_iter()
        .zip(scores)
        .find(|&(_, s)| s == best)
        .unwrap()
        .0;
    (label, scores)
}

fn vote_oracle() -> Outcome {
    let weights = VoteWeights::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let mut ties = 0;
    for i in 0..10_000 {
        // every fourth tuple draws from a small range so ties are common
        let max = if i % 4 == 0 { 6 } else { 200 };
        let c: [u32; 6] = std::array::from_fn(|_| rng.gen_range(0..=max));
        let (want, scores) = vote_oracle_label(c);
        let out = vote(&counts(c), &weights);
        ensure(out.label == want, || format!("{c:?}: got {}, oracle {want}", out.label))?;
        let got_scores = [out.scores.covid19, out.scores.cap, out.scores.normal];
        for (g, s) in got_scores.iter().zip(scores) {
            ensure(*g == Ratio::new(s, 10).unwrap(), || format!("{c:?}: score {g} vs {s}/10"))?;
        }
        let best = scores.iter().max().unwrap();
        if scores.iter().filter(|s| *s == best).count() > 1 {
            ties += 1;
        }
    }
    ensure(ties > 0, || "no ties exercised".into())?;

    for _ in 0..1_000 {
        let c: [u32; 6] = std::array::from_fn(|_| rng.gen_range(0..=200));
        let k = rng.gen_range(2..=1000u32);
        let base = vote(&counts(c), &weights).label;
        let scaled = vote(&counts(c.map(|v| v * k)), &weights).label;
        ensure(base == scaled, || format!("{c:?} scaled by {k}: {base} -> {scaled}"))?;
    }
    let zero = vote(&counts([0; 6]), &weights);
    ensure(zero.label == Class::Covid19 && zero.degenerate, || "all-zero counts".into())?;
    Ok(format!(
        "10000 tuples exact ({ties} with tied top scores), 1000 scaled tuples invariant"
    ))
}

// reference ops

fn reference_ops() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let mut worst = [0f64; 4];
    for _ in 0..100 {
        let (h, w, c) = (rng.gen_range(1..=64), rng.gen_range(1..=64), rng.gen_range(1..=16));
        let values: Vec<f64> = (0..h * w * c).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let map = FeatureMap::new(h, w, c, values.clone()).unwrap();
        let got = global_average_pool(&map);
        for ch in 0..c {
            let mut sum = 0.0;
            for row in 0..h {
                for col in 0..w {
                    sum += values[(row * w + col) * c + ch];
                }
            }
            worst[0] = worst[0].max((got[ch] - sum / (h * w) as f64).abs());
        }
    }
    for i in 0..100 {
        // a few full-size heads, the rest small enough to keep the run short
        let (n_in, n_out) = if i < 3 {
            (2048, 1024)
        } else {
            (rng.gen_range(0..=256), rng.gen_range(1..=64))
        };
        let weights: Vec<f64> = (0..n_in * n_out).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let bias: Vec<f64> = (0..n_out).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x: Vec<f64> = (0..n_in).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let layer = DenseLayer::new(n_in, n_out, weights.clone(), bias.clone()).unwrap();
        let got = dense(&x, &layer).unwrap();
        for o in 0..n_out {
            let mut acc = bias[o];
            for j in 0..n_in {
                acc += weights[o * n_in + j] * x[j];
            }
            worst[1] = worst[1].max((got[o] - acc).abs());
        }
    }
    for _ in 0..100 {
        let x: f64 = rng.gen_range(-30.0..30.0);
        worst[2] = worst[2].max((sigmoid(x) - 1.0 / (1.0 + (-x).exp())).abs());
    }
    for _ in 0..100 {
        let len = rng.gen_range(1..=32);
        let logits: Vec<f64> = (0..len).map(|_| rng.gen_range(-20.0..20.0)).collect();
        let exps: Vec<f64> = logits.iter().map(|v| v.exp()).collect();
        let total: f64 = exps.iter().sum();
        for (g, e) in softmax(&logits).iter().zip(&exps) {
            worst[3] = worst[3].max((g - e / total).abs());
        }
    }
    let names = ["GAP", "dense", "sigmoid", "softmax"];
    for (name, err) in names.iter().zip(worst) {
        ensure(err <= 1e-12, || format!("{name} oracle error {err:e}"))?;
    }

    let mut simplex_err = 0f64;
    let mut shift_err = 0f64;
    for _ in 0..100 {
        let len = rng.gen_range(1..=32);
        let logits: Vec<f64> = (0..len).map(|_| rng.gen_range(-1e4..1e4)).collect();
        let p = softmax(&logits);
        ensure(p.iter().all(|v| (0.0..=1.0).contains(v)), || format!("entry outside [0, 1]: {p:?}"))?;
        simplex_err = simplex_err.max((p.iter().sum::<f64>() - 1.0).abs());
        // shift invariance is measured where entries do not underflow
        let moderate: Vec<f64> = (0..len).map(|_| rng.gen_range(-30.0..30.0)).collect();
        let shift = rng.gen_range(-1e3..1e3);
        let base = softmax(&moderate);
        let shifted = softmax(&moderate.iter().map(|v| v + shift).collect::<Vec<_>>());
        for (a, b) in base.iter().zip(&shifted) {
            shift_err = shift_err.max((a - b).abs());
        }
    }
    ensure(simplex_err <= 1e-6, || format!("simplex sum off by {simplex_err:e}"))?;
    ensure(shift_err <= 1e-9, || format!("shift invariance off by {shift_err:e}"))?;
    Ok(format!(
        "max |err| GAP {:.1e}, dense {:.1e}, sigmoid {:.1e}, softmax {:.1e}; \
         simplex at ±1e4 {simplex_err:.1e}; shift {shift_err:.1e}",
        worst[0], worst[1], worst[2], worst[3]
    ))
}

// end to end

fn diagnose_via_binary(manifest: &Path, out: &Path, jobs: usize) -> Result<Vec<u8>, String> {
    let o = Command::new(env!("CARGO_BIN_EXE_ctriage"))
        .args(["diagnose", "--manifest"])
        .arg(manifest)
        .arg("--out")
        .arg(out)
        .args(["--mock", common::MOCK_RULE, "--jobs", &jobs.to_string()])
        .output()
        .map_err(|e| e.to_string())?;
    ensure(o.status.success(), || String::from_utf8_lossy(&o.stderr).into_owned())?;
    std::fs::read(out).map_err(|e| e.to_string())
}

fn end_to_end() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let patients = common::five_patients();
    let manifest = common::write_dataset(dir.path(), &patients, 8);
    let a = diagnose_via_binary(&manifest, &dir.path().join("a.json"), 1)?;
    let b = diagnose_via_binary(&manifest, &dir.path().join("b.json"), 1)?;
    let c = diagnose_via_binary(&manifest, &dir.path().join("c.json"), 8)?;
    ensure(a == b, || "two --jobs 1 runs differ".into())?;
    ensure(a == c, || "--jobs 1 and --jobs 8 differ".into())?;
    let report = read_report(dir.path().join("a.json")).map_err(|e| e.to_string())?;
    let mut labels = Vec::new();
    for (record, patient) in report.patients.iter().zip(&patients) {
        ensure(record.label == Some(patient.expected_label), || {
            format!("{}: got {:?}, expected {}", patient.id, record.label, patient.expected_label)
        })?;
        labels.push(format!("{}={}", patient.id, patient.expected_label));
    }
    ensure(report.patients.len() == patients.len(), || "missing patients".into())?;
    Ok(format!(
        "labels {} match; {} report bytes identical across runs and --jobs 1/8",
        labels.join(" "),
        a.len()
    ))
}

// metrics

fn metrics() -> Outcome {
    let cm = ConfusionMatrix::from_rows(&[vec![8, 1, 1], vec![2, 7, 1], vec![0, 1, 9]])
        .map_err(|e| e.to_string())?;
    let accuracy = cm.accuracy().map_err(|e| e.to_string())?;
    ensure(accuracy == Ratio::new(24, 30).unwrap(), || format!("accuracy {accuracy}"))?;
    let want = [(8, 10), (7, 10), (9, 10)];
    for (c, (n, d)) in want.into_iter().enumerate() {
        let s = cm.sensitivity(c).map_err(|e| e.to_string())?;
        ensure(s == Ratio::new(n, d).unwrap(), || format!("sensitivity[{c}] = {s}"))?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    let mut worst = 0f64;
    for _ in 0..1_000 {
        let k = rng.gen_range(2..=6);
        let rows: Vec<Vec<u64>> = (0..k)
            .map(|_| {
                let mut row: Vec<u64> = (0..k).map(|_| rng.gen_range(0..500)).collect();
                row[rng.gen_range(0..k)] += 1; // no empty class row
                row
            })
            .collect();
        let cm = ConfusionMatrix::from_rows(&rows).map_err(|e| e.to_string())?;
        let total = cm.total() as f64;
        let weighted: f64 = (0..k)
            .map(|c| cm.sensitivity(c).unwrap().to_f64() * cm.row_total(c) as f64 / total)
            .sum();
        worst = worst.max((weighted - cm.accuracy().unwrap().to_f64()).abs());
    }
    ensure(worst <= 1e-12, || format!("weighted identity off by {worst:e}"))?;
    Ok(format!(
        "worked example accuracy 0.8, sensitivities 0.8/0.7/0.9 exact; identity max |err| {worst:.1e} over 1000 matrices"
    ))
}

// latency

fn latency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
    let n_slices = 50;
    let side = 512;
    let voxels: Vec<i16> = (0..n_slices * side * side)
        .map(|_| rng.gen_range(-1200..400))
        .collect();
    let volume = CtVolume::new("latency", n_slices, side, side, Some(1.0), voxels)
        .map_err(|e| e.to_string())?;
    let spec = WindowSpec::default();

    // windowing + tensor assembly (including the 3-channel backend layout)
    let mut per_slice = Vec::with_capacity(n_slices);
    for i in 0..n_slices {
        let start = Instant::now();
        let tensor = make_slice_tensor(&volume, i, spec).map_err(|e| e.to_string())?;
        let hwc = tensor.to_hwc();
        std::hint::black_box(&hwc);
        per_slice.push(start.elapsed());
    }
    per_slice.sort();
    let median = per_slice[n_slices / 2];
    ensure(median < Duration::from_millis(5), || format!("median slice preprocessing {median:?}"))?;

    // full diagnose with a mock backend, single worker
    let pipeline = Pipeline::new(PipelineConfig {
        jobs: Some(1),
        ..PipelineConfig::default()
    })
    .map_err(|e| e.to_string())?;
    let backend = MockStage2::parse(common::MOCK_RULE).map_err(|e| e.to_string())?;
    let start = Instant::now();
    pipeline.diagnose(&volume, &backend).map_err(|e| e.to_string())?;
    let diagnose = start.elapsed() / n_slices as u32;
    ensure(diagnose < Duration::from_millis(160), || format!("diagnose {diagnose:?} per slice"))?;

    // and through the file format once, to include volume IO
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    write_volume(&volume, dir.path().join("v.raw")).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let loaded = ctriage::volume_io::load_volume(dir.path().join("v.raw")).map_err(|e| e.to_string())?;
    pipeline.diagnose(&loaded, &backend).map_err(|e| e.to_string())?;
    let with_io = start.elapsed() / n_slices as u32;
    ensure(with_io < Duration::from_millis(160), || format!("load + diagnose {with_io:?} per slice"))?;

    Ok(format!(
        "slice preprocessing median {median:.2?} (< 5 ms); mock diagnose {diagnose:.2?}/slice, \
         with volume IO {with_io:.2?}/slice (< 160 ms)"
    ))
}
