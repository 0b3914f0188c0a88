//! One function per verb: each runs its experiment and returns tables,
//! plots, a JSON result block, realized parameters and gate outcomes.

use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Serialize;
use serde_json::{json, Value};
use stp_core::exec::Schedule;
use stp_core::experiments::{
    alpha_survey, discontinuity_run, equidistribution_check, fixed_center_run, kurzweil_run, limsup_measure,
    loglaw_profile, LimsupEstimate,
};
use stp_core::fixedpoint::{Grid, Radius, UnitPoint};
use stp_core::geometry::{
    interval_lemma_check, measure_pair, measure_pair_exhaustive, measure_strip, measure_strip_exhaustive,
    parallelogram_decomposition, random_lemma_instance, select_window, union_measure, MeasureEstimate, Sampling,
    StripSpec,
};
use stp_core::maps::{parse_map, IntervalMap};
use stp_core::sequences::{derive_bprime, parse_sequence, DerivedSequence, RadiusTable, TargetSequence, Targets};

use crate::artifacts::{Cell, Plot, Table};
use crate::config::{map_for_draw, RunConfig, Verb};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Gate {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Gate {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Gate { name: name.into(), passed, detail: detail.into() }
    }
}

#[derive(Debug, Default)]
pub struct VerbOutput {
    pub tables: Vec<(String, Table)>,
    pub plots: Vec<(String, Plot)>,
    pub results: Value,
    pub realized: Value,
    pub gates: Vec<Gate>,
    pub notes: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct VerbError(pub String);

fn fail(e: impl std::fmt::Display) -> VerbError {
    VerbError(e.to_string())
}

/// A base sequence or its derived `b′`, behind one [`Targets`] impl.
pub enum Seq {
    Base(TargetSequence),
    Derived(DerivedSequence),
}

impl Targets for Seq {
    fn value(&self, i: u64) -> f64 {
        match self {
            Seq::Base(s) => s.value(i),
            Seq::Derived(s) => s.value(i),
        }
    }

    fn exact(&self, i: u64) -> Option<BigRational> {
        match self {
            Seq::Base(s) => s.exact(i),
            Seq::Derived(s) => s.exact(i),
        }
    }

    fn radius(&self, i: u64, grid: Grid) -> Radius {
        match self {
            Seq::Base(s) => s.radius(i, grid),
            Seq::Derived(s) => s.radius(i, grid),
        }
    }

    fn label(&self) -> String {
        match self {
            Seq::Base(s) => s.label(),
            Seq::Derived(s) => s.label(),
        }
    }
}

impl Seq {
    pub fn build(text: &str, horizon: u64) -> Result<Seq, VerbError> {
        let spec = parse_sequence(text).map_err(fail)?;
        Ok(if spec.is_derived() {
            Seq::Derived(derive_bprime(spec.base(), horizon).map_err(fail)?)
        } else {
            Seq::Base(spec.base().clone())
        })
    }

    fn describe(&self) -> Value {
        match self {
            Seq::Base(s) => json!({ "label": s.label(), "derived": false }),
            Seq::Derived(d) => json!({
                "label": d.label(),
                "derived": true,
                "horizon": d.horizon(),
                "blocks": d.block_ends().len(),
                "first_block_ends": d.block_ends().iter().take(8).collect::<Vec<_>>(),
                "incomplete_final_block": d.incomplete_final_block(),
            }),
        }
    }
}

fn build_map(spec: &str, grid: Grid) -> Result<IntervalMap, VerbError> {
    parse_map(spec, grid).map_err(fail)
}

/// A configured angle; angles are forced odd like rotation maps.
fn odd_point(cfg: &RunConfig, key: &str) -> Result<UnitPoint, VerbError> {
    let g = cfg.grid();
    let p = g.parse_point(cfg.text(key)).map_err(fail)?;
    Ok(g.point_wrapping(p.k() | 1))
}

fn point(cfg: &RunConfig, key: &str) -> Result<UnitPoint, VerbError> {
    cfg.grid().parse_point(cfg.text(key)).map_err(fail)
}

fn realized_point(p: UnitPoint) -> Value {
    json!({ "residue": p.k().to_string(), "approx": p.to_f64() })
}

pub fn execute(cfg: &RunConfig) -> Result<VerbOutput, VerbError> {
    let mut out = match cfg.verb {
        Verb::Limsup | Verb::Kurzweil | Verb::FixedCenter => tail_verb(cfg),
        Verb::Marchese => marchese(cfg),
        Verb::Loglaw => loglaw(cfg),
        Verb::AlphaSurvey => survey(cfg),
        Verb::Equidist => equidist(cfg),
        Verb::MeasureVn => measure_vn(cfg),
        Verb::MeasurePair => measure_pair_verb(cfg),
        Verb::UnionBound => union_bound(cfg),
        Verb::IntervalLemma => interval_lemma(cfg),
    }?;
    if let Value::Object(m) = &mut out.realized {
        m.insert("q".into(), json!(cfg.q()));
    }
    Ok(out)
}

fn tail_table(est: &LimsupEstimate) -> Table {
    let mut t = Table::new(&[
        "tail_start[index]",
        "hitting[count]",
        "samples[count]",
        "fraction[probability]",
        "stderr[probability]",
        "method",
    ]);
    for tail in &est.tails {
        t.push(vec![
            tail.start.into(),
            tail.hitting.into(),
            est.samples.into(),
            tail.fraction.into(),
            tail.stderr.into(),
            "monte_carlo".into(),
        ]);
    }
    t
}

fn tail_verb(cfg: &RunConfig) -> Result<VerbOutput, VerbError> {
    let g = cfg.grid();
    let n = cfg.horizon();
    let seq = Seq::build(cfg.seq(), n)?;
    let radii = RadiusTable::build(&seq, g, n, Schedule::Auto);
    let tails = cfg.tails();
    let (est, realized) = match cfg.verb {
        Verb::Limsup => {
            let f = build_map(cfg.map(), g)?;
            let alpha = odd_point(cfg, "alpha")?;
            let x = point(cfg, "x")?;
            let est = limsup_measure(&f, alpha, x, &radii, cfg.samples(), cfg.seed(), &tails, Schedule::Auto)
                .map_err(fail)?;
            (est, json!({ "map": f.describe(), "alpha": realized_point(alpha), "x": realized_point(x) }))
        }
        Verb::Kurzweil => {
            let alpha = odd_point(cfg, "alpha")?;
            let x = point(cfg, "x")?;
            let est =
                kurzweil_run(alpha, x, &radii, cfg.samples(), cfg.seed(), &tails, Schedule::Auto).map_err(fail)?;
            (est, json!({ "alpha": realized_point(alpha), "x": realized_point(x) }))
        }
        _ => {
            let f = build_map(cfg.map(), g)?;
            let y = point(cfg, "y_center")?;
            let est = fixed_center_run(&f, y, &radii, cfg.samples(), cfg.seed(), &tails, Schedule::Auto)
                .map_err(fail)?;
            (est, json!({ "map": f.describe(), "y_center": realized_point(y) }))
        }
    };
    let mut realized = realized;
    realized["sequence"] = seq.describe();

    let mut samples = Table::new(&["sample[index]", "start[grid_residue]", "hits[count]", "first_hit[index]", "last_hit[index]", "method"]);
    for (i, s) in est.per_sample.iter().enumerate() {
        samples.push(vec![i.into(), s.point.into(), s.hits.into(), s.first.into(), s.last.into(), "orbit_walk".into()]);
    }
    let half = (n / 2).max(1);
    let hitting = est.per_sample.iter().filter(|s| s.hits_tail(half)).count() as u64;
    let fraction = hitting as f64 / est.samples.max(1) as f64;
    let threshold = cfg.real("gate");
    let passed = fraction >= threshold;
    let mut notes = Vec::new();
    if !passed {
        notes.push(format!(
            "tail fraction {fraction} at n = {half} is below {threshold}; a finite run cannot tell an exceptional sample from slow convergence"
        ));
    }
    let plot = Plot {
        title: format!("{}: tail-hit fraction, N = {n}", cfg.verb),
        x_label: "tail start n".into(),
        y_label: "fraction with a hit in [n, N]".into(),
        log_x: false,
        series: vec![(cfg.verb.name().into(), est.tails.iter().map(|t| (t.start as f64, t.fraction)).collect())],
    };
    Ok(VerbOutput {
        tables: vec![("tails.csv".into(), tail_table(&est)), ("samples.csv".into(), samples)],
        plots: vec![("tails.svg".into(), plot)],
        results: json!({
            "horizon": n,
            "samples": est.samples,
            "tails": est.tails,
            "expected_total": est.expected_total,
            "expected_total_note": "sum of 2 b_i, an independence heuristic",
            "gate_tail_start": half,
            "gate_fraction": fraction,
        }),
        realized,
        gates: vec![Gate::new(
            "tail_fraction_at_half_horizon",
            passed,
            format!("fraction {fraction} at n = {half}, threshold {threshold}"),
        )],
        notes,
    })
}

fn marchese(cfg: &RunConfig) -> Result<VerbOutput, VerbError> {
    let g = cfg.grid();
    let n = cfg.horizon();
    let seq = Seq::build(cfg.seq(), n)?;
    let draws = cfg.int("draws");
    let (di, dpi) = (cfg.int("delta") as usize - 1, cfg.int("delta_prime") as usize - 1);
    let runs = Schedule::Auto.map(0..draws, |i| -> Result<_, VerbError> {
        let spec = map_for_draw(cfg.map(), i);
        let f = build_map(&spec, g)?;
        let disc = f.discontinuities();
        let (d, dp) = (disc[di], disc[dpi]);
        let rec = discontinuity_run(&f, d, dp, &seq, n).map_err(fail)?;
        Ok((spec, d, dp, rec))
    });
    let mut table = Table::new(&[
        "draw[index]",
        "map",
        "delta[grid_residue]",
        "delta_prime[grid_residue]",
        "hits[count]",
        "first_hit[index]",
        "last_hit[index]",
        "expected[count]",
        "method",
    ]);
    let mut with_hits = 0u64;
    let mut records = Vec::new();
    for (i, r) in runs.into_iter().enumerate() {
        let (spec, d, dp, rec) = r?;
        with_hits += (rec.count() > 0) as u64;
        table.push(vec![
            i.into(),
            spec.clone().into(),
            d.k().into(),
            dp.k().into(),
            rec.count().into(),
            rec.indices.first().copied().unwrap_or(0).into(),
            rec.indices.last().copied().unwrap_or(0).into(),
            rec.expected_total.into(),
            "orbit_walk".into(),
        ]);
        records.push(json!({ "map": spec, "hits": rec.count(), "first_indices": rec.indices.iter().take(16).collect::<Vec<_>>() }));
    }
    let fraction = with_hits as f64 / draws as f64;
    let threshold = cfg.real("gate");
    Ok(VerbOutput {
        tables: vec![("draws.csv".into(), table)],
        results: json!({ "horizon": n, "draws": records, "fraction_with_hits": fraction }),
        realized: json!({ "map": build_map(cfg.map(), g)?.describe(), "sequence": seq.describe() }),
        gates: vec![Gate::new(
            "draws_with_hits",
            fraction > threshold,
            format!("{with_hits} of {draws} draws hit; need a fraction above {threshold}"),
        )],
        ..VerbOutput::default()
    })
}

pub const SLOPE_RANGE: (f64, f64) = (0.8, 1.2);

fn loglaw(cfg: &RunConfig) -> Result<VerbOutput, VerbError> {
    let g = cfg.grid();
    let (a, b) = cfg.range("radius_exponents");
    let radii: Vec<f64> = (a..=b).map(|e| (-(e as f64)).exp2()).collect();
    let draws = cfg.int("draws");
    let mut table = Table::new(&[
        "draw[index]",
        "radius[unit_interval]",
        "neg_log_r[nats]",
        "mean_log_tau[nats]",
        "censored[count]",
        "pairs[count]",
        "method",
    ]);
    let mut slopes = Table::new(&["draw[index]", "map", "slope[ratio]", "intercept[nats]", "in_range", "method"]);
    let mut series = Vec::new();
    let mut in_range = 0u64;
    let mut summary = Vec::new();
    for i in 0..draws {
        let spec = map_for_draw(cfg.map(), i);
        let f = build_map(&spec, g)?;
        let p = loglaw_profile(&f, &radii, cfg.samples(), cfg.int("cap"), cfg.seed(), Schedule::Auto).map_err(fail)?;
        for (j, r) in radii.iter().enumerate() {
            table.push(vec![
                i.into(),
                (*r).into(),
                (-r.ln()).into(),
                p.mean_log_tau[j].unwrap_or(f64::NAN).into(),
                p.censored[j].into(),
                p.pairs.into(),
                "first_passage".into(),
            ]);
        }
        let ok = p.slope.is_some_and(|s| (SLOPE_RANGE.0..=SLOPE_RANGE.1).contains(&s));
        in_range += ok as u64;
        slopes.push(vec![
            i.into(),
            spec.clone().into(),
            p.slope.unwrap_or(f64::NAN).into(),
            p.intercept.unwrap_or(f64::NAN).into(),
            ok.into(),
            "least_squares".into(),
        ]);
        series.push((
            format!("draw {i}"),
            radii.iter().zip(&p.mean_log_tau).filter_map(|(r, m)| m.map(|m| (-r.ln(), m))).collect(),
        ));
        summary.push(json!({ "map": spec, "slope": p.slope, "intercept": p.intercept, "censored": p.censored }));
    }
    let fraction = in_range as f64 / draws as f64;
    let threshold = cfg.real("gate");
    Ok(VerbOutput {
        tables: vec![("loglaw.csv".into(), table), ("slopes.csv".into(), slopes)],
        plots: vec![(
            "loglaw.svg".into(),
            Plot {
                title: "mean log hitting time against -log r".into(),
                x_label: "-log r".into(),
                y_label: "mean log tau_r".into(),
                log_x: false,
                series,
            },
        )],
        results: json!({ "radii": radii, "draws": summary, "fraction_in_range": fraction, "slope_range": [SLOPE_RANGE.0, SLOPE_RANGE.1] }),
        realized: json!({ "map": build_map(cfg.map(), g)?.describe() }),
        gates: vec![Gate::new(
            "slopes_in_range",
            fraction >= threshold,
            format!("{in_range} of {draws} slopes in [{}, {}], threshold {threshold}", SLOPE_RANGE.0, SLOPE_RANGE.1),
        )],
        ..VerbOutput::default()
    })
}

fn survey(cfg: &RunConfig) -> Result<VerbOutput, VerbError> {
    let g = cfg.grid();
    let n = cfg.horizon();
    let seq = Seq::build(cfg.seq(), n)?;
    let radii = RadiusTable::build(&seq, g, n, Schedule::Auto);
    let f = build_map(cfg.map(), g)?;
    let x = point(cfg, "x")?;
    let s = alpha_survey(&f, x, &radii, cfg.int("alpha_samples"), cfg.samples(), cfg.real("theta"), cfg.seed(), Schedule::Auto)
        .map_err(fail)?;
    let mut table = Table::new(&["alpha_index[index]", "alpha[grid_residue]", "fraction[probability]", "good", "method"]);
    for r in &s.rows {
        table.push(vec![r.index.into(), r.alpha.clone().into(), r.fraction.into(), r.good.into(), "monte_carlo".into()]);
    }
    let threshold = cfg.real("gate");
    Ok(VerbOutput {
        tables: vec![("alphas.csv".into(), table)],
        results: json!({
            "theta": s.theta,
            "tail_start": s.tail_start,
            "y_samples": s.y_samples,
            "good_fraction": s.good_fraction,
            "histogram": s.histogram,
        }),
        realized: json!({ "map": f.describe(), "x": realized_point(x), "sequence": seq.describe() }),
        gates: vec![Gate::new(
            "good_alpha_fraction",
            s.good_fraction >= threshold,
            format!("good fraction {} at theta {}, threshold {threshold}", s.good_fraction, s.theta),
        )],
        ..VerbOutput::default()
    })
}

fn equidist(cfg: &RunConfig) -> Result<VerbOutput, VerbError> {
    let g = cfg.grid();
    let f = build_map(cfg.map(), g)?;
    let alpha = odd_point(cfg, "alpha")?;
    let (x, y) = (point(cfg, "x")?, point(cfg, "y")?);
    let p = equidistribution_check(&f, alpha, x, y, cfg.list("checkpoints")).map_err(fail)?;
    let mut table = Table::new(&["n[count]", "anchored[discrepancy]", "upper[discrepancy]", "method"]);
    for d in &p.points {
        table.push(vec![d.n.into(), d.anchored.into(), d.upper.into(), "dyadic_grid_64".into()]);
    }
    Ok(VerbOutput {
        tables: vec![("discrepancy.csv".into(), table)],
        plots: vec![(
            "discrepancy.svg".into(),
            Plot {
                title: "grid discrepancy of the product orbit".into(),
                x_label: "N".into(),
                y_label: "discrepancy".into(),
                log_x: true,
                series: vec![
                    ("anchored".into(), p.points.iter().map(|d| (d.n as f64, d.anchored)).collect()),
                    ("upper bound".into(), p.points.iter().map(|d| (d.n as f64, d.upper)).collect()),
                ],
            },
        )],
        results: json!({ "points": p.points, "decreasing": p.decreasing }),
        realized: json!({ "map": f.describe(), "alpha": realized_point(alpha), "x": realized_point(x), "y": realized_point(y) }),
        gates: vec![Gate::new("discrepancy_decreasing", p.decreasing, "grid discrepancy strictly decreasing across checkpoints")],
        ..VerbOutput::default()
    })
}

fn measure_header(pair: bool) -> Table {
    let mut cols: Vec<&str> = if pair { vec!["j[index]", "k[index]"] } else { vec!["n[index]"] };
    cols.extend(["closed_form[area]", "estimate[area]", "stderr[area]", "samples[count]", "z[sigma]", "method"]);
    Table::new(&cols)
}

fn measure_cells(closed: f64, e: &MeasureEstimate) -> Vec<Cell> {
    let z = if e.method == stp_core::geometry::Method::MonteCarlo { e.z_score() } else { f64::NAN };
    vec![closed.into(), e.estimate.into(), e.stderr.into(), e.samples.into(), z.into(), e.method.as_str().into()]
}

/// Gate for one estimate: `|z| ≤ sigmas` for Monte Carlo, within one cell
/// `1/2^bits` for exhaustive counts.
fn estimate_gate(name: String, closed: f64, e: &MeasureEstimate, sigmas: f64, cell: f64) -> Gate {
    match e.method {
        stp_core::geometry::Method::MonteCarlo => {
            Gate::new(name, e.agrees(sigmas, 0.0), format!("z = {} (limit {sigmas})", e.z_score()))
        }
        _ => {
            let d = (e.estimate - closed).abs();
            Gate::new(name, d <= cell, format!("|estimate - closed form| = {d} (limit {cell})"))
        }
    }
}

fn exhaustive_grid(cfg: &RunConfig) -> Result<Option<(Grid, IntervalMap)>, VerbError> {
    match cfg.int("exhaustive_bits") {
        0 => Ok(None),
        b => {
            let g = Grid::new(b as u32).map_err(fail)?;
            Ok(Some((g, build_map(cfg.map(), g)?)))
        }
    }
}

fn measure_vn(cfg: &RunConfig) -> Result<VerbOutput, VerbError> {
    let g = cfg.grid();
    let f = build_map(cfg.map(), g)?;
    let seq = Seq::build(cfg.seq(), cfg.horizon())?;
    let small = exhaustive_grid(cfg)?;
    let sigmas = cfg.real("sigmas");
    let mut table = measure_header(false);
    let mut gates = Vec::new();
    let mut rows = Vec::new();
    for &n in cfg.list("n") {
        let closed = 2.0 * seq.value(n);
        let spec = StripSpec::from_targets(&f, &seq, n).map_err(fail)?;
        let mc = measure_strip(&spec, Sampling::new(cfg.samples(), cfg.seed())).map_err(fail)?;
        let mut row = vec![Cell::from(n)];
        row.extend(measure_cells(closed, &mc));
        table.push(row);
        gates.push(estimate_gate(format!("strip_{n}_monte_carlo"), closed, &mc, sigmas, 0.0));
        rows.push(json!({ "n": n, "closed_form": closed, "monte_carlo": mc }));
        if let Some((sg, sf)) = &small {
            let spec = StripSpec::from_targets(sf, &seq, n).map_err(fail)?;
            let ex = measure_strip_exhaustive(&spec, Schedule::Auto).map_err(fail)?;
            let mut row = vec![Cell::from(n)];
            row.extend(measure_cells(closed, &ex));
            table.push(row);
            gates.push(estimate_gate(format!("strip_{n}_exhaustive"), closed, &ex, sigmas, 1.0 / sg.size_f64()));
            rows.push(json!({ "n": n, "closed_form": closed, "exhaustive": ex, "bits": sg.bits() }));
        }
    }
    Ok(VerbOutput {
        tables: vec![("strips.csv".into(), table)],
        results: json!({ "rows": rows }),
        realized: json!({ "map": f.describe(), "sequence": seq.describe() }),
        gates,
        ..VerbOutput::default()
    })
}

fn measure_pair_verb(cfg: &RunConfig) -> Result<VerbOutput, VerbError> {
    let g = cfg.grid();
    let f = build_map(cfg.map(), g)?;
    let horizon = cfg.pairs().iter().map(|p| p.1).max().unwrap_or(1);
    let seq = Seq::build(cfg.seq(), horizon)?;
    let small = exhaustive_grid(cfg)?;
    let sigmas = cfg.real("sigmas");
    let mut table = measure_header(true);
    let mut gates = Vec::new();
    let mut rows = Vec::new();
    for &(j, k) in cfg.pairs() {
        let closed = 4.0 * seq.value(j) * seq.value(k);
        let sj = StripSpec::from_targets(&f, &seq, j).map_err(fail)?;
        let sk = StripSpec::from_targets(&f, &seq, k).map_err(fail)?;
        let mc = measure_pair(&sj, &sk, Sampling::new(cfg.samples(), cfg.seed())).map_err(fail)?;
        let mut row = vec![Cell::from(j), Cell::from(k)];
        row.extend(measure_cells(closed, &mc));
        table.push(row);
        gates.push(estimate_gate(format!("pair_{j}_{k}_monte_carlo"), closed, &mc, sigmas, 0.0));
        let mut entry = json!({ "j": j, "k": k, "closed_form": closed, "monte_carlo": mc });
        if let (Some(bj), Some(bk)) = (seq.exact(j), seq.exact(k)) {
            let report = parallelogram_decomposition(j, k, &bj, &bk).map_err(fail)?;
            let total = report.clipped_total.to_f64().unwrap_or(f64::NAN);
            table.push(vec![
                j.into(),
                k.into(),
                closed.into(),
                total.into(),
                0.0.into(),
                0u64.into(),
                f64::NAN.into(),
                "parallelogram_exact".into(),
            ]);
            gates.push(Gate::new(
                format!("pair_{j}_{k}_parallelogram"),
                report.consistent(),
                format!("{} pieces, clipped total {} vs {}", report.count, report.clipped_total, report.total),
            ));
            entry["parallelogram"] = serde_json::to_value(&report).expect("serializable");
        }
        if let Some((sg, sf)) = &small {
            let sj = StripSpec::from_targets(sf, &seq, j).map_err(fail)?;
            let sk = StripSpec::from_targets(sf, &seq, k).map_err(fail)?;
            let ex = measure_pair_exhaustive(&sj, &sk, Schedule::Auto).map_err(fail)?;
            let mut row = vec![Cell::from(j), Cell::from(k)];
            row.extend(measure_cells(closed, &ex));
            table.push(row);
            gates.push(estimate_gate(format!("pair_{j}_{k}_exhaustive"), closed, &ex, sigmas, 1.0 / sg.size_f64()));
            entry["exhaustive"] = serde_json::to_value(&ex).expect("serializable");
        }
        rows.push(entry);
    }
    Ok(VerbOutput {
        tables: vec![("pairs.csv".into(), table)],
        results: json!({ "rows": rows }),
        realized: json!({ "map": f.describe(), "sequence": seq.describe() }),
        gates,
        ..VerbOutput::default()
    })
}

fn union_bound(cfg: &RunConfig) -> Result<VerbOutput, VerbError> {
    let g = cfg.grid();
    let f = build_map(cfg.map(), g)?;
    let n = cfg.horizon();
    let t_max = cfg.list("t").iter().copied().max().unwrap_or(1);
    let seq = Seq::build(cfg.seq(), t_max * n)?;
    let sigmas = cfg.real("sigmas");
    let mut table = Table::new(&[
        "t[multiplier]",
        "n0[index]",
        "n[index]",
        "two_sigma[area]",
        "bonferroni[area]",
        "estimate[area]",
        "stderr[area]",
        "samples[count]",
        "method",
    ]);
    let mut gates = Vec::new();
    let mut rows = Vec::new();
    for &t in cfg.list("t") {
        for &n0 in cfg.list("n0") {
            let w = select_window(t, n0, &seq, g, n).map_err(fail)?;
            let e = union_measure(&f, &seq, &w, Sampling::new(cfg.samples(), cfg.seed())).map_err(fail)?;
            table.push(vec![
                t.into(),
                n0.into(),
                w.n.into(),
                w.two_sigma.into(),
                w.bonferroni.into(),
                e.estimate.into(),
                e.stderr.into(),
                e.samples.into(),
                e.method.as_str().into(),
            ]);
            let sigma = e.gate_sigma();
            gates.push(Gate::new(format!("window_t{t}_n{n0}"), w.in_window, format!("2 sigma = {}", w.two_sigma_exact)));
            gates.push(Gate::new(
                format!("union_t{t}_n{n0}_above_eighth"),
                e.estimate - sigmas * sigma > 0.125,
                format!("estimate {} with {sigmas} sigma margin {}", e.estimate, sigmas * sigma),
            ));
            gates.push(Gate::new(
                format!("union_t{t}_n{n0}_above_bonferroni"),
                e.estimate + sigmas * sigma >= w.bonferroni,
                format!("estimate {} vs bound {}", e.estimate, w.bonferroni),
            ));
            rows.push(json!({ "window": w, "estimate": e }));
        }
    }
    Ok(VerbOutput {
        tables: vec![("union.csv".into(), table)],
        results: json!({ "rows": rows }),
        realized: json!({ "map": f.describe(), "sequence": seq.describe() }),
        gates,
        ..VerbOutput::default()
    })
}

fn interval_lemma(cfg: &RunConfig) -> Result<VerbOutput, VerbError> {
    let q = cfg.int("lemma_q") as usize;
    let density = cfg.real("density");
    let seed = cfg.seed();
    let outcomes = Schedule::Auto.map(0..cfg.samples(), |i| {
        let inst = random_lemma_instance(q, density, seed, i);
        let out = interval_lemma_check(&inst.set, inst.k, inst.start, inst.len, None);
        (inst.start, inst.len, out)
    });
    let mut table = Table::new(&[
        "instance[index]",
        "k[period]",
        "start[grid_index]",
        "length[grid_count]",
        "measured[measure]",
        "bound[measure]",
        "ratio[ratio]",
        "passes",
        "method",
    ]);
    let mut passed = 0u64;
    let mut worst = f64::INFINITY;
    for (i, (start, len, out)) in outcomes.into_iter().enumerate() {
        let out = out.map_err(fail)?;
        passed += out.passes as u64;
        worst = worst.min(out.ratio);
        table.push(vec![
            i.into(),
            out.k.into(),
            start.into(),
            len.into(),
            out.measured.into(),
            out.bound.into(),
            out.ratio.into(),
            out.passes.into(),
            "exhaustive_count".into(),
        ]);
    }
    let total = cfg.samples();
    let (c_num, c_den) = stp_core::geometry::LEMMA_CONSTANT;
    Ok(VerbOutput {
        tables: vec![("instances.csv".into(), table)],
        results: json!({ "instances": total, "passed": passed, "smallest_ratio": worst, "constant": format!("{c_num}/{c_den}") }),
        realized: json!({ "lemma_q": q, "density": density }),
        gates: vec![Gate::new("all_instances_pass", passed == total, format!("{passed} of {total} pass"))],
        ..VerbOutput::default()
    })
}
