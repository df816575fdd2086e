//! Exit criteria. Each criterion prints one PASS/FAIL line; the binary fails
//! if any criterion does.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use common::*;
use rand::Rng;
use sboxlab_core::infotheory::{
    conditional_entropy, entropy, joint_entropy, mutual_information, Distribution, JointDistribution,
};
use sboxlab_core::report::{load_sbox, run_full_suite_on, BaselineFixture, Format, SuiteConfig, SuiteData};
use sboxlab_core::{
    aes, apply_stream, check_completeness, check_non_contradiction, compute_avalanche, compute_ddt, compute_lat,
    emit_report, invert_sbox, parse_sbox, run_test, unapply_stream, PairedStreams, SBox, StreamPair, TestConfig,
    TestData, TestKind,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let held: bool = $cond;
        if !held {
            return Err(format!($($msg)+));
        }
    };
}

fn within(elapsed: Duration, limit: Duration) -> Outcome {
    ensure!(elapsed < limit, "took {elapsed:?}, limit {limit:?}");
    Ok(format!("{elapsed:.2?}"))
}

fn all_kinds() -> impl Iterator<Item = TestKind> {
    TestKind::STATIC.into_iter().chain(TestKind::DYNAMIC)
}

fn criterion_1_fixture_closure() -> Outcome {
    let start = Instant::now();
    let oracle = aes_oracle_box();
    let fixture = parse_sbox(aes::FIXTURE_TEXT).map_err(|e| e.to_string())?;
    ensure!(fixture == oracle, "bundled fixture differs from the GF(2^8) oracle");
    ensure!(check_completeness(&fixture), "fixture incomplete");
    ensure!(check_non_contradiction(&fixture) == Ok(true), "fixture has duplicates");
    let inv = invert_sbox(&fixture).map_err(|e| e.to_string())?;
    for x in 0..256usize {
        let y = fixture.lookup(x).unwrap() as usize;
        ensure!(inv.lookup(y) == Some(x as u32), "inv(S({x})) != {x}");
        let back = inv.lookup(x).unwrap() as usize;
        ensure!(fixture.lookup(back) == Some(x as u32), "S(inv({x})) != {x}");
    }
    within(start.elapsed(), Duration::from_secs(1))
}

fn criterion_2_spectral_reference() -> Outcome {
    let start = Instant::now();
    let s = aes::sbox();
    let ddt = compute_ddt(&s).map_err(|e| e.to_string())?;
    let lat = compute_lat(&s).map_err(|e| e.to_string())?;
    let av = compute_avalanche(&s).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();

    ensure!(ddt.delta_uniformity() == 4, "delta uniformity {}", ddt.delta_uniformity());
    ensure!(lat.max_abs_bias() == 32, "max |LAT| {}", lat.max_abs_bias());
    ensure!(lat.nonlinearity() == 112, "nonlinearity {}", lat.nonlinearity());
    let sum = av.summary();
    ensure!(sum.min >= 0.40 && sum.max <= 0.60, "avalanche range [{}, {}]", sum.min, sum.max);
    ensure!((sum.mean - 0.5).abs() <= 0.01, "avalanche mean {}", sum.mean);

    // independent enumerations over the oracle table
    let table = aes_oracle();
    let direct = direct_ddt(&table);
    ensure!(direct[1..].iter().flatten().max() == Some(&4), "direct DDT disagrees");
    let bias = direct_lat(&table).iter().flat_map(|r| r[1..].to_vec()).map(i32::unsigned_abs).max();
    ensure!(bias == Some(32), "direct LAT disagrees");
    within(elapsed, Duration::from_secs(5)).map(|t| format!("{t}, mean flip {:.6}", sum.mean))
}

fn criterion_3_entropy_engine() -> Outcome {
    let h = entropy(&Distribution::uniform(256).unwrap());
    ensure!((h - 8.0).abs() <= 1e-9, "uniform-256 entropy {h}");

    let mut rng = rng(2024);
    for i in 0..1000 {
        let rows = rng.gen_range(1..=12);
        let cols = rng.gen_range(1..=12);
        let counts: Vec<u64> = (0..rows * cols).map(|_| rng.gen_range(0..100)).collect();
        let Ok(j) = JointDistribution::from_counts(rows, cols, &counts) else { continue };
        let chain = entropy(&j.col_marginal()) + conditional_entropy(&j);
        ensure!((joint_entropy(&j) - chain).abs() <= 1e-9, "chain rule off on joint {i}");
        ensure!(mutual_information(&j) >= -1e-9, "negative information on joint {i}");

        let marginal: Vec<u64> = (0..rows).map(|_| rng.gen_range(0..100)).collect();
        if marginal.iter().all(|&c| c == 0) {
            continue;
        }
        let mut diag = vec![0u64; rows * rows];
        for (k, &c) in marginal.iter().enumerate() {
            diag[k * rows + k] = c;
        }
        let d = JointDistribution::from_counts(rows, rows, &diag).unwrap();
        let hx = entropy(&Distribution::from_counts(&marginal).unwrap());
        ensure!((mutual_information(&d) - hx).abs() <= 1e-9, "I(X;X) != H(X) on joint {i}");
    }
    Ok("1000 random joints".into())
}

fn criterion_4_zero_knowledge() -> Outcome {
    let mut rng = rng(4);
    let mut boxes = vec![aes::sbox()];
    boxes.extend((0..100).map(|_| random_box(256, &mut rng)));
    for (b, s) in boxes.iter().enumerate() {
        let in1 = random_bytes(8192, &mut rng);
        let in2 = random_bytes(8192, &mut rng);
        let out1 = apply_stream(s, &in1).unwrap();
        let out2 = apply_stream(s, &in2).unwrap();
        for kind in all_kinds() {
            let data = if kind.is_dynamic() {
                TestData::Dynamic(PairedStreams::new(&in1, &in2, &out1, &out2).unwrap())
            } else {
                TestData::Static(StreamPair::new(&in1, &out1).unwrap())
            };
            for (cfg, data) in [(TestConfig::exhaustive(0), None), (TestConfig::empirical(0), Some(data))] {
                let res = run_test(kind, s, &cfg, data).map_err(|e| format!("box {b} {kind}: {e}"))?;
                ensure!(res.worst_deviation == 0.0, "box {b} {kind} {}: deviation {}", cfg.mode, res.worst_deviation);
                ensure!(res.passed, "box {b} {kind} {} not passed", cfg.mode);
            }
        }
    }
    Ok(format!("{} boxes x 6 tests x 2 modes", boxes.len()))
}

fn criterion_5_degenerate_boxes() -> Outcome {
    for c in [0x00u32, 0x01, 0x5a, 0xff] {
        let s = SBox::from_table(&(0..256).map(|x| x ^ c).collect::<Vec<_>>()).unwrap();
        let full = TestConfig::exhaustive(8).with_epsilon(0.01);
        for kind in [TestKind::StatIo, TestKind::StatOi] {
            let res = run_test(kind, &s, &full, None).map_err(|e| e.to_string())?;
            ensure!(res.worst_deviation == 0.5, "x^{c:#x} {kind}: deviation {}", res.worst_deviation);
            ensure!(!res.passed, "x^{c:#x} {kind} passed");
        }
        // dy == dx, so each dy bit is a point mass given dx; the marginal over
        // nonzero dx is 128/255, and the largest possible gap is that marginal
        let res = run_test(TestKind::DynIo, &s, &full, None).map_err(|e| e.to_string())?;
        let maximal = 128.0 / 255.0;
        ensure!(res.worst_deviation == maximal, "x^{c:#x} dyn_io: deviation {}", res.worst_deviation);
        ensure!(!res.passed, "x^{c:#x} dyn_io passed");
        for r in 0..8 {
            let res = run_test(TestKind::DynOo, &s, &TestConfig::exhaustive(r), None).map_err(|e| e.to_string())?;
            ensure!(res.worst_deviation == 0.0, "x^{c:#x} dyn_oo r={r}: deviation {}", res.worst_deviation);
            ensure!(res.passed, "x^{c:#x} dyn_oo r={r} failed");
        }
    }
    Ok("identity and 3 affine boxes".into())
}

fn criterion_6_mode_agreement() -> Outcome {
    let start = Instant::now();
    let s = aes::sbox();
    let input: Vec<u8> = (0..=255).collect();
    let output = apply_stream(&s, &input).unwrap();
    let mut worst: f64 = 0.0;
    for r in 0..=2 {
        for kind in TestKind::STATIC {
            let ex = run_test(kind, &s, &TestConfig::exhaustive(r), None).map_err(|e| e.to_string())?;
            let data = TestData::Static(StreamPair::new(&input, &output).unwrap());
            let em = run_test(kind, &s, &TestConfig::empirical(r), Some(data)).map_err(|e| e.to_string())?;
            ensure!(em.records.len() == ex.records.len(), "{kind} r={r}: record counts differ");
            for (a, b) in em.records.iter().zip(&ex.records) {
                worst = worst.max((a.max_deviation - b.max_deviation).abs());
                worst = worst.max((a.mutual_information_bits - b.mutual_information_bits).abs());
            }
            worst = worst.max((em.worst_deviation - ex.worst_deviation).abs());
        }
    }
    ensure!(worst <= 1e-9, "largest disagreement {worst}");
    within(start.elapsed(), Duration::from_secs(10)).map(|t| format!("{t}, max diff {worst:e}"))
}

fn criterion_7_small_box_oracle() -> Outcome {
    let mut rng = rng(77);
    let mut worst: f64 = 0.0;
    for b in 0..10 {
        let table = random_permutation(16, &mut rng);
        let s = SBox::from_table(&table).unwrap();
        for (kind, roles) in [
            (TestKind::StatIo, Roles::InputOutput),
            (TestKind::StatOi, Roles::OutputInput),
            (TestKind::StatOo, Roles::OutputOutput),
        ] {
            for r in 0..=3 {
                let res = run_test(kind, &s, &TestConfig::exhaustive(r), None).map_err(|e| e.to_string())?;
                let oracle = brute_force(&exhaustive_samples(&table, roles), 4, r, kind == TestKind::StatOo, 1);
                ensure!(res.records.len() == oracle.len(), "box {b} {kind} r={r}: record counts differ");
                for (rec, &(mask, target, dev, mi)) in res.records.iter().zip(&oracle) {
                    ensure!((rec.mask, rec.target_bit) == (mask, target), "box {b} {kind} r={r}: record order");
                    worst = worst.max((rec.max_deviation - dev).abs());
                    worst = worst.max((rec.mutual_information_bits - mi).abs());
                }
            }
        }
    }
    ensure!(worst <= 1e-12, "largest disagreement {worst}");
    Ok(format!("max diff {worst:e}"))
}

fn criterion_8_substitution_roundtrip() -> Outcome {
    let mut rng = rng(8);
    let mut bytes = 0usize;
    let mut busy = Duration::ZERO;
    for b in 0..10 {
        let s = random_box(256, &mut rng);
        let data = random_bytes(1 << 20, &mut rng);
        let start = Instant::now();
        let out = apply_stream(&s, &data).map_err(|e| e.to_string())?;
        let back = unapply_stream(&s, &out).map_err(|e| e.to_string())?;
        busy += start.elapsed();
        bytes += 2 * data.len();
        ensure!(out.len() == data.len(), "box {b}: length changed");
        ensure!(back == data, "box {b}: roundtrip differs");
    }
    let mib_per_s = bytes as f64 / (1 << 20) as f64 / busy.as_secs_f64();
    ensure!(mib_per_s >= 10.0, "throughput {mib_per_s:.1} MiB/s");
    Ok(format!("{mib_per_s:.0} MiB/s"))
}

fn criterion_9_report_determinism() -> Outcome {
    let s = aes::sbox();
    let config = SuiteConfig::default();
    let a = emit_report(&run_full_suite_on(&s, &config, &SuiteData::default()), Format::Json);
    let b = emit_report(&run_full_suite_on(&s, &config, &SuiteData::default()), Format::Json);
    ensure!(a == b, "two AES reports differ");

    let report = run_full_suite_on(&s, &config, &SuiteData::default());
    let delta = report.baseline_delta.as_ref().ok_or("AES report has no baseline delta")?;
    ensure!(!delta.is_empty() && delta.values().all(|&v| v == 0.0), "AES baseline delta is not all zero");
    ensure!(report.metrics() == BaselineFixture::bundled().metrics, "AES metrics differ from the bundled fixture");
    ensure!(
        BaselineFixture::generate().to_json() == BaselineFixture::bundled_text(),
        "regenerated baseline differs from the bundled file"
    );

    // exit-status classes: pass, criterion failure, input error
    let pass = run_full_suite_on(&s, &SuiteConfig { ranks: vec![0], ..SuiteConfig::default() }, &SuiteData::default());
    ensure!(pass.exit_code() == 0, "AES with r=0 should pass");
    let identity = SBox::from_table(&(0..256).collect::<Vec<_>>()).unwrap();
    ensure!(run_full_suite_on(&identity, &config, &SuiteData::default()).exit_code() == 1, "identity should fail");
    let mut dup: Vec<u32> = (0..256).collect();
    dup[3] = 4;
    let dup = SBox::from_table(&dup).unwrap();
    ensure!(run_full_suite_on(&dup, &config, &SuiteData::default()).exit_code() == 1, "duplicate should fail");
    let dir = std::env::temp_dir().join(format!("sboxlab-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let empty = dir.join("empty.txt");
    std::fs::write(&empty, "").map_err(|e| e.to_string())?;
    ensure!(load_sbox(&empty).is_err(), "empty file parsed");
    ensure!(load_sbox(Path::new("/nonexistent/box.txt")).is_err(), "missing file loaded");
    let _ = std::fs::remove_dir_all(&dir);
    Ok(format!("{} byte JSON, {} baseline metrics", a.len(), delta.len()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 AES fixture closure", criterion_1_fixture_closure),
        ("2 spectral reference values", criterion_2_spectral_reference),
        ("3 entropy engine exactness", criterion_3_entropy_engine),
        ("4 independence at r=0", criterion_4_zero_knowledge),
        ("5 degenerate-box detection", criterion_5_degenerate_boxes),
        ("6 mode agreement", criterion_6_mode_agreement),
        ("7 small-box oracle equivalence", criterion_7_small_box_oracle),
        ("8 substitution roundtrip", criterion_8_substitution_roundtrip),
        ("9 report determinism and exit status", criterion_9_report_determinism),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS  criterion {name} ({detail})"),
            Err(why) => {
                failed += 1;
                println!("FAIL  criterion {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
