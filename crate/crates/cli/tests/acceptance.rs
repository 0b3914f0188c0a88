//! One pass/fail line per acceptance criterion; exits nonzero if any fails.

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::ToPrimitive;
use stp_cli::verbs::{execute, VerbOutput};
use stp_cli::{parse_config, run_text, RunOptions};
use stp_core::exec::Schedule;
use stp_core::experiments::shift_implication;
use stp_core::fixedpoint::Grid;
use stp_core::geometry::{parallelogram_decomposition, select_window, select_window_exact};
use stp_core::maps::{parse_map, random_iet, IntervalMap, Permutation, RANDOM_IET_WORDS};
use stp_core::qset::is_grid_bijection;
use stp_core::rng::{streams, RngStream};
use stp_core::sequences::{derive_bprime, RadiusTable, TargetSequence, Targets};

type Outcome = Result<String, String>;

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn verb(text: &str) -> Result<VerbOutput, String> {
    let cfg = parse_config(text).map_err(|e| e.to_string())?;
    execute(&cfg).map_err(|e| e.to_string())
}

fn failed_gates(out: &VerbOutput) -> Vec<String> {
    out.gates.iter().filter(|g| !g.passed).map(|g| format!("{}: {}", g.name, g.detail)).collect()
}

const FAMILIES: [&str; 3] = ["rot:random:1", "iet:4:4,3,2,1:random:1", "times:3"];

fn strip_measure() -> Outcome {
    let mut bad = Vec::new();
    let mut gates = 0;
    for map in FAMILIES {
        let out = verb(&format!(
            "verb = measure-vn\nmap = {map}\nseq = bprime(harmonic:1)\nn = 1,3,10,50\nsamples = 1000000\nexhaustive_bits = 12\nsigmas = 4\n"
        ))?;
        gates += out.gates.len();
        bad.extend(failed_gates(&out).into_iter().map(|g| format!("{map} {g}")));
    }
    if bad.is_empty() {
        Ok(format!("{gates} estimates within 4 sigma or one Q12 cell"))
    } else {
        Err(bad.join("; "))
    }
}

fn pair_measure() -> Outcome {
    let mut bad = Vec::new();
    let d = derive_bprime(&TargetSequence::harmonic(Ratio::from_integer(1)), 100).map_err(|e| e.to_string())?;
    for (j, k) in [(1u64, 2u64), (2, 5), (3, 17)] {
        let (bj, bk) = (d.exact(j).unwrap(), d.exact(k).unwrap());
        let r = parallelogram_decomposition(j, k, &bj, &bk).map_err(|e| e.to_string())?;
        let closed = BigRational::from_integer(4.into()) * &bj * &bk;
        if !r.consistent() || r.total != closed || r.clipped_total != closed {
            bad.push(format!("parallelogram ({j},{k}) total {} vs {closed}", r.clipped_total));
        }
    }
    for map in FAMILIES {
        let out = verb(&format!(
            "verb = measure-pair\nmap = {map}\nseq = bprime(harmonic:1)\npairs = 1:2,2:5,3:17\nsamples = 10000000\nsigmas = 4\n"
        ))?;
        bad.extend(failed_gates(&out).into_iter().map(|g| format!("{map} {g}")));
    }
    if bad.is_empty() {
        Ok("9 Monte Carlo pairs within 4 sigma, parallelogram totals exact".into())
    } else {
        Err(bad.join("; "))
    }
}

fn union_window() -> Outcome {
    let seq = TargetSequence::harmonic(Ratio::new(1, 16));
    let (n, _) = select_window_exact(1, 1, &seq, 1000).map_err(|e| e.to_string())?;
    if n != 11 {
        return Err(format!("1/(16n) window ends at {n}, expected 11"));
    }
    let w = select_window(1, 1, &seq, Grid::new(64).unwrap(), 1000).map_err(|e| e.to_string())?;
    if w.n != 11 || !w.in_window {
        return Err(format!("quantized 1/(16n) window {w:?}"));
    }
    let out = verb("verb = union-bound\nmap = rot:golden\nseq = bprime(harmonic:1)\nt = 1,2,5\nn0 = 1,10\nn = 40000000\nsamples = 1000000\nsigmas = 4\n")?;
    let bad = failed_gates(&out);
    let rows = out.results["rows"].as_array().map_or(0, |r| r.len());
    if bad.is_empty() && rows == 6 {
        let ns: Vec<String> = out.results["rows"]
            .as_array()
            .unwrap()
            .iter()
            .map(|r| r["window"]["n"].to_string())
            .collect();
        Ok(format!("N = 11 for 1/(16n); windows N = {} all above 1/8", ns.join(",")))
    } else {
        Err(bad.join("; "))
    }
}

fn small(r: &BigRational) -> (u128, u128) {
    (r.numer().to_u128().expect("small numerator"), r.denom().to_u128().expect("small denominator"))
}

/// Decides `Σ terms ≥ 1` exactly: a float sum with a rigorous error bound,
/// falling back to rational arithmetic only when the bound cannot decide.
fn sum_at_least_one(terms: &[(u128, u128)]) -> bool {
    let sum: f64 = terms.iter().map(|&(a, b)| a as f64 / b as f64).sum();
    let slack = 4.0 * (terms.len() as f64 + 1.0) * f64::EPSILON * sum.max(1.0);
    if (sum - 1.0).abs() > slack {
        return sum > 1.0;
    }
    let exact: BigRational = terms.iter().map(|&(a, b)| BigRational::new(BigInt::from(a), BigInt::from(b))).sum();
    exact >= BigRational::from_integer(1.into())
}

fn bprime_construction() -> Outcome {
    let horizon = 100_000u64;
    let g = Grid::new(64).unwrap();
    for base in [TargetSequence::harmonic(Ratio::from_integer(1)), TargetSequence::constant(Ratio::new(1, 2))] {
        let label = base.label();
        let d = derive_bprime(&base, horizon).map_err(|e| e.to_string())?;
        let mut prev = (1u128, 1u128);
        let mut c = Vec::with_capacity(horizon as usize);
        for n in 1..=horizon {
            let (bn, bd) = small(&d.exact(n).unwrap());
            let n16 = 16 * n as u128;
            if bn * n16 > bd {
                return Err(format!("{label}: b'_{n} = {bn}/{bd} exceeds 1/(16n)"));
            }
            if d.radius(n, g).r() * n16 >= 1u128 << 64 {
                return Err(format!("{label}: quantized b'_{n} not strictly inside 1/(16n)"));
            }
            let k = d.block_of(n) as u128;
            let (an, ad) = small(&base.exact(n).unwrap());
            if bn * ad * k > an * bd {
                return Err(format!("{label}: b'_{n} exceeds b_n/k"));
            }
            if bn * prev.1 > prev.0 * bd {
                return Err(format!("{label}: b' increases at {n}"));
            }
            prev = (bn, bd);
            c.push((an, ad * k));
        }
        for block in d.blocks().iter().filter(|b| b.complete) {
            if !sum_at_least_one(&c[block.start as usize - 1..block.end as usize]) {
                return Err(format!("{label}: block {} has c-sum below 1", block.k));
            }
        }
    }
    let h = derive_bprime(&TargetSequence::harmonic(Ratio::from_integer(1)), 100).unwrap();
    if h.exact(1) != Some(rat(1, 16)) || h.exact(4) != Some(rat(1, 64)) {
        return Err(format!("b'_1 = {:?}, b'_4 = {:?}", h.exact(1), h.exact(4)));
    }
    Ok("harmonic and constant 1/2 to 1e5 exact; b'_1 = 1/16, b'_4 = 1/64".into())
}

fn interval_lemma() -> Outcome {
    let out = verb("verb = interval-lemma\nlemma_q = 65536\nsamples = 1000\n")?;
    let bad = failed_gates(&out);
    if bad.is_empty() {
        Ok(format!("1000 of 1000 instances, smallest ratio {}", out.results["smallest_ratio"]))
    } else {
        Err(bad.join("; "))
    }
}

fn random_map(g: Grid, i: u64) -> IntervalMap {
    let spec = match i % 3 {
        0 => format!("rot:random:{i}"),
        1 => {
            let d = 2 + (i / 3) % 6;
            let perm: Vec<String> = (1..=d).rev().map(|v| v.to_string()).collect();
            format!("iet:{d}:{}:random:{i}", perm.join(","))
        }
        _ => format!("times:{}", [3, 5, 7, 9][(i / 3 % 4) as usize]),
    };
    parse_map(&spec, g).unwrap()
}

fn shift_property() -> Outcome {
    let g = Grid::new(64).unwrap();
    let n = 10_000;
    let radii = RadiusTable::build(&TargetSequence::harmonic(Ratio::new(1, 4)), g, n, Schedule::Auto);
    let rng = RngStream::new(6, streams::MISC);
    let results = Schedule::Auto.map(0..1000u64, |i| {
        let f = random_map(g, i);
        let mut c = rng.cursor(i);
        let [alpha, x, y] = [0; 3].map(|_| g.point_wrapping(c.next_u128()));
        shift_implication(&f, alpha, x, y, &radii).map_err(|e| e.to_string())
    });
    let (mut hits, mut violations) = (0u64, 0usize);
    for r in results {
        let r = r?;
        hits += r.hits;
        violations += r.violations.len();
    }
    if violations == 0 && hits > 0 {
        Ok(format!("{hits} hits over 1000 instances, zero violations"))
    } else {
        Err(format!("{violations} violations over {hits} hits"))
    }
}

fn tail_hit_gate() -> Outcome {
    let base = "verb = limsup\nmap = iet:3:3,2,1:random:1\nalpha = sqrt2m1\nn = 1000000\nsamples = 1000\n";
    let main = verb(&format!("{base}seq = harmonic:1\ngate = 0.95\n"))?;
    let control = verb(&format!("{base}seq = power:1:2\ngate = 0\n"))?;
    let (fm, fc) = (main.results["gate_fraction"].as_f64().unwrap(), control.results["gate_fraction"].as_f64().unwrap());
    let detail = format!("harmonic fraction {fm} (need >= 0.95), 1/i^2 control {fc} (need <= 0.05)");
    if fm >= 0.95 && fc <= 0.05 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn log_law() -> Outcome {
    let out = verb("verb = loglaw\nmap = iet:4:4,3,2,1:random:0\nradius_exponents = 5..14\nsamples = 64\ncap = 100000000\ndraws = 10\ngate = 0.8\n")?;
    let slopes: Vec<String> = out.results["draws"]
        .as_array()
        .unwrap()
        .iter()
        .map(|d| d["slope"].as_f64().map_or("none".into(), |s| format!("{s:.3}")))
        .collect();
    let detail = format!("slopes {}", slopes.join(" "));
    if failed_gates(&out).is_empty() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn bijectivity() -> Outcome {
    let g = Grid::new(12).unwrap();
    let mut maps: Vec<IntervalMap> = ["rot:golden", "rot:sqrt2m1", "rot:3/7", "rot:random:1", "times:3", "times:5", "times:7", "times:9"]
        .iter()
        .map(|s| parse_map(s, g).unwrap())
        .collect();
    maps.push(parse_map("iet:3:3,1,2:1/5,1/2,3/10", g).unwrap());
    maps.push(parse_map("iet:4:2,4,1,3:random:4", g).unwrap());
    let stream = RngStream::new(2, streams::MAPS).with_words_per_index(RANDOM_IET_WORDS);
    for d in 2..=8usize {
        for s in 0..4u64 {
            let iet = random_iet(g, Permutation::reversal(d).unwrap(), &mut stream.cursor(d as u64 * 8 + s)).unwrap();
            maps.push(IntervalMap::iet(iet));
        }
    }
    for f in &maps {
        if !is_grid_bijection(f) {
            return Err(format!("{:?} is not a bijection at Q12", f.describe()));
        }
    }
    let big = Grid::new(64).unwrap();
    for spec in ["rot:golden", "rot:sqrt2m1", "rot:random:7"] {
        let f = parse_map(spec, big).unwrap();
        let alpha = f.rotation_angle().unwrap();
        let mut p = 987_654_321u128;
        for _ in 0..1_000_000 {
            p = f.apply_raw(p);
        }
        if p != big.add(987_654_321, big.mul(alpha, 1_000_000)) {
            return Err(format!("{spec}: iterated orbit disagrees with closed form"));
        }
    }
    Ok(format!("{} maps bijective at Q12; 3 rotations exact over 1e6 steps", maps.len()))
}

const SMALL_RUNS: [&str; 11] = [
    "verb = limsup\nmap = iet:3:3,2,1:random:1\nseq = harmonic:1\nn = 5000\ngate = 0\n",
    "verb = kurzweil\nseq = harmonic:1\nn = 5000\n",
    "verb = fixed-center\nmap = iet:4:4,3,2,1:random:2\nseq = harmonic:1\nn = 5000\ngate = 0\n",
    "verb = marchese\nmap = iet:3:3,2,1:random:5\nseq = harmonic:1/4\nn = 20000\ndraws = 4\ngate = 0\n",
    "verb = loglaw\nmap = iet:4:4,3,2,1:random:3\nradius_exponents = 3..8\nsamples = 16\ndraws = 2\ngate = 0\n",
    "verb = alpha-survey\nmap = rot:random:9\nseq = harmonic:1\nn = 1000\nsamples = 100\nalpha_samples = 100\ngate = 0\n",
    "verb = equidist\nmap = iet:3:3,2,1:random:2\ncheckpoints = 1000,10000,100000\n",
    "verb = measure-vn\nmap = iet:4:4,3,2,1:random:1\nseq = bprime(harmonic:1)\nn = 1,3,10\nsamples = 100000\nexhaustive_bits = 10\n",
    "verb = measure-pair\nmap = times:3\nseq = bprime(harmonic:1)\npairs = 1:2,2:5\nsamples = 100000\nexhaustive_bits = 10\n",
    "verb = union-bound\nt = 1,2\nn0 = 1,10\nn = 1000000\nsamples = 100000\n",
    "verb = interval-lemma\nlemma_q = 16384\nsamples = 100\n",
];

fn outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv" || e == "json") && p.file_name().unwrap() != "manifest.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

fn reproducibility() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut files = 0;
    for (i, cfg) in SMALL_RUNS.iter().enumerate() {
        let mut runs = Vec::new();
        for (tag, workers) in [("a", 1), ("b", 1), ("c", 8)] {
            let dir = tmp.path().join(format!("{tag}{i}"));
            let text = format!("{cfg}workers = {workers}\nout = {}\n", dir.display());
            run_text(&text, RunOptions::default()).map_err(|e| format!("{cfg:?}: {e}"))?;
            runs.push(outputs(&dir));
        }
        let verb = cfg.lines().next().unwrap_or("");
        if runs[0].len() < 2 {
            return Err(format!("{verb}: too few outputs"));
        }
        if runs[0] != runs[1] {
            return Err(format!("{verb}: repeated runs differ"));
        }
        if runs[0] != runs[2] {
            return Err(format!("{verb}: 1 and 8 workers differ"));
        }
        files += runs[0].len();
    }
    Ok(format!("11 verbs, {files} CSV/JSON files byte-identical across repeats and 1 vs 8 workers"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, Option<u64>); 10] = [
        ("strip measure", strip_measure, Some(60)),
        ("pair measure", pair_measure, Some(300)),
        ("union window", union_window, Some(60)),
        ("b' construction", bprime_construction, Some(1)),
        ("interval lemma", interval_lemma, Some(30)),
        ("shift implication", shift_property, Some(60)),
        ("tail-hit gate", tail_hit_gate, Some(600)),
        ("log law", log_law, Some(300)),
        ("bijectivity and exactness", bijectivity, Some(30)),
        ("reproducibility", reproducibility, None),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failures = 0;
    for (i, (name, check, budget)) in criteria.into_iter().enumerate() {
        let id = i + 1;
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let over = budget.is_some_and(|b| elapsed > Duration::from_secs(b));
        let budget_text = budget.map_or("no budget".to_string(), |b| format!("budget {b} s"));
        let (pass, detail) = match outcome {
            Ok(d) if !over => (true, d),
            Ok(d) => (false, format!("{d}; over time budget")),
            Err(d) => (false, d),
        };
        failures += !pass as usize;
        println!(
            "criterion {id:>2} {} {name}: {detail} ({:.1} s, {budget_text})",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
