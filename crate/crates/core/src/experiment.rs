//! Scenario-driven experiments: potential schedules keeping `n^d W(eta)`
//! constant, hypothesis guards, plans over a grid of sizes, and CSV / JSON
//! reports.
//!
//! Limits along `n -> inf` are checked as monotone trends on the finite grid;
//! every such verdict is labeled as a finite-size surrogate.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::configs::{filter_by_weight, GibbsParams, LocalConfig, LocalFrame, WeightMode};
use crate::error::{Error, Result};
use crate::geography::{self, BoundSides, Evaluation, OccurrenceScan, PairScan};
use crate::lattice::{Lattice, LatticeSpec, Norm};
use crate::sampler::{self, ChainSettings, Estimate};
use crate::stats::{self, Direction, TrendVerdict};
use crate::ubiquity::{self, BlockField, BlockMap, BlockSpec, Regime, RegimeThresholds};

/// Version tag of the scenario file format.
pub const FORMAT_TAG: &str = "torus-gibbs/1";

/// Number of standard errors used by every Monte Carlo comparison.
pub const Z_SCORE: f64 = 3.0;

/// Pair potential as a function of the size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum PairRule {
    Constant { b: f64 },
    /// `b(n) = b0 + slope ln n`.
    LogGrowth { b0: f64, slope: f64 },
}

impl PairRule {
    pub fn at(&self, n: usize) -> f64 {
        match *self {
            PairRule::Constant { b } => b,
            PairRule::LogGrowth { b0, slope } => b0 + slope * (n as f64).ln(),
        }
    }
}

/// Potentials at a given size and the guard values they produce.
#[derive(Debug, Clone, Serialize)]
pub struct SolvedSchedule {
    pub n: usize,
    pub params: GibbsParams,
    /// `a + V b`.
    pub single_sum: f64,
    /// `a + 2 V b <= 0`.
    pub double_ok: bool,
    /// `n^d W(eta)`, recomputed from the solved potentials.
    pub occupancy: f64,
}

/// Solves `n^d exp(2 a k - 2 b gamma) = lambda` for `a` at the given `b(n)`.
pub fn solve_schedule(
    lambda: f64,
    eta: &LocalConfig,
    pair: &PairRule,
    d: usize,
    n: usize,
    degree: usize,
) -> Result<SolvedSchedule> {
    if eta.k() == 0 {
        return Err(Error::Unschedulable(
            "the all-minus configuration has weight 1 at every size".into(),
        ));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Unschedulable(format!("lambda must be positive, got {lambda}")));
    }
    let b = pair.at(n);
    let a = (lambda.ln() - d as f64 * (n as f64).ln() + 2.0 * b * eta.gamma() as f64)
        / (2.0 * eta.k() as f64);
    if a >= 0.0 {
        return Err(Error::Unschedulable(format!(
            "solved magnetic field a({n}) = {a} is not negative"
        )));
    }
    let params = GibbsParams::new(a, b)?;
    Ok(SolvedSchedule {
        n,
        params,
        single_sum: a + degree as f64 * b,
        double_ok: params.satisfies_double(degree),
        occupancy: ((d as f64) * (n as f64).ln() + eta.log_weight(&params)).exp(),
    })
}

/// Per-size and grid-level hypothesis flags.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisFlags {
    pub sizes: Vec<usize>,
    /// `a + 2 V b <= 0` per size.
    pub double_ok: Vec<bool>,
    /// `a + V b` per size.
    pub single_sum: Vec<f64>,
    /// Finite-grid surrogate for `a + V b -> -inf`: strict decrease and a final
    /// value below the threshold.
    pub divergence_ok: bool,
    pub first_failure: Option<usize>,
}

impl HypothesisFlags {
    pub fn all_ok(&self) -> bool {
        self.first_failure.is_none() && self.divergence_ok
    }
}

pub fn check_hypotheses(grid: &[(usize, GibbsParams)], degree: usize, threshold: f64) -> HypothesisFlags {
    let sizes: Vec<usize> = grid.iter().map(|g| g.0).collect();
    let double_ok: Vec<bool> = grid.iter().map(|g| g.1.satisfies_double(degree)).collect();
    let single_sum: Vec<f64> = grid
        .iter()
        .map(|g| g.1.a() + degree as f64 * g.1.b())
        .collect();
    let decreasing = single_sum.windows(2).all(|w| w[1] < w[0]);
    let divergence_ok = decreasing && single_sum.last().is_some_and(|&s| s <= threshold);
    let first_failure = sizes.iter().zip(&double_ok).find(|(_, &ok)| !ok).map(|(&n, _)| n);
    HypothesisFlags {
        sizes,
        double_ok,
        single_sum,
        divergence_ok,
        first_failure,
    }
}

/// A size-dependent radius or distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum SizeRule {
    Constant { value: usize },
    /// `ceil(scale * sqrt(n))`.
    Sqrt { scale: f64 },
    /// `floor(n * num / den) + offset`.
    Linear { num: usize, den: usize, offset: i64 },
    /// Explicit values per size.
    Table { values: Vec<(usize, usize)> },
    /// Same value as the plan's radius rule at this size.
    SameAsRadius,
}

impl SizeRule {
    pub fn at(&self, n: usize) -> Result<usize> {
        match self {
            SizeRule::Constant { value } => Ok(*value),
            SizeRule::Sqrt { scale } => Ok((scale * (n as f64).sqrt()).ceil() as usize),
            SizeRule::Linear { num, den, offset } => {
                let v = (n * num / (*den).max(1)) as i64 + offset;
                usize::try_from(v).map_err(|_| Error::InvalidArgument(format!("rule gives {v} at n = {n}")))
            }
            SizeRule::Table { values } => values
                .iter()
                .find(|(m, _)| *m == n)
                .map(|&(_, v)| v)
                .ok_or_else(|| Error::InvalidArgument(format!("table rule has no entry for n = {n}"))),
            SizeRule::SameAsRadius => Err(Error::InvalidArgument(
                "`same_as_radius` is only meaningful for pair distances".into(),
            )),
        }
    }
}

/// Weight threshold realized as the weight of an actual local configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum WeightRule {
    /// The weight of the plan's anchor configuration.
    Anchor,
    /// The weight of the given configuration record.
    Config { record: String },
    /// The smallest weight over all local configurations.
    Minimum,
}

/// Where the potentials come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Potentials {
    Fixed { a: f64, b: f64 },
    /// `a(n)` solved so that `n^d W(anchor) = lambda`.
    Schedule { lambda: f64, pair: PairRule },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMethod {
    Exact,
    Mcmc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSpec {
    pub radius: SizeRule,
    pub ell: SizeRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Experiment {
    /// Exponential sandwich for the absence of light configurations near the
    /// origin.
    AbsenceBounds {
        radius: SizeRule,
        epsilon: f64,
        weight: WeightRule,
        sides: BoundSides,
        method: EvalMethod,
    },
    /// Distance between the anchor copy count and Poisson(lambda); optionally
    /// the normalized minimal distance between copies given at least two.
    Poisson { min_distance_fraction: Option<f64> },
    /// Occurrences around a planted anchor copy at the origin: the ring event
    /// with `C_r(W)` for each radius rule, the pair event with `D_r(W)` for
    /// each pair rule, `W` the anchor weight.
    Distance { ring: Vec<SizeRule>, pairs: Vec<PairSpec> },
    /// Induced block measure along the grid, target chosen by the regime.
    Ubiquity { method: EvalMethod },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub format: String,
    pub name: String,
    pub d: usize,
    pub q: Norm,
    pub rho: usize,
    pub r: usize,
    pub n_grid: Vec<usize>,
    /// Anchor configuration record, e.g. `r=1:000010000`.
    pub anchor: String,
    pub potentials: Potentials,
    pub experiment: Experiment,
    #[serde(default)]
    pub chain: ChainSettings,
    #[serde(default)]
    pub exploratory: bool,
    /// Final value of `a + V b` below which the divergence guard passes.
    #[serde(default = "default_divergence")]
    pub divergence_threshold: f64,
}

fn default_divergence() -> f64 {
    -1.0
}

impl ExperimentPlan {
    pub fn from_toml(text: &str) -> Result<Self> {
        let plan: ExperimentPlan = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.format != FORMAT_TAG {
            return Err(Error::Parse(format!(
                "unsupported scenario format `{}` (expected `{FORMAT_TAG}`)",
                self.format
            )));
        }
        if self.n_grid.is_empty() || self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("n_grid must be non-empty and increasing".into()));
        }
        Ok(())
    }

    fn spec(&self, n: usize) -> LatticeSpec {
        LatticeSpec::new(self.d, n, self.q, self.rho)
    }
}

/// One cell of a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub experiment: String,
    pub n: usize,
    pub a: f64,
    pub b: f64,
    #[serde(rename = "R")]
    pub big_r: Option<usize>,
    pub ell: Option<usize>,
    pub weight_id: String,
    pub estimate: f64,
    pub se: f64,
    pub bound_low: Option<f64>,
    pub bound_high: Option<f64>,
    pub v: Option<u32>,
    pub block_count: Option<usize>,
    pub driving: Option<f64>,
    pub verdict: String,
}

/// A named check over the whole plan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub check: String,
    pub passed: bool,
    /// Inconclusive or informational outcome (never a failure).
    pub flagged: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub name: String,
    pub format: String,
    pub exploratory: bool,
    pub rows: Vec<ReportRow>,
    pub verdicts: Vec<Verdict>,
    pub hypotheses: Option<HypothesisFlags>,
    pub seed: u64,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    /// Nonzero exit wanted: some verdict failed in a non-exploratory run.
    pub fn failed(&self) -> bool {
        !self.exploratory && !self.passed()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for row in &self.rows {
            out.serialize(row).map_err(|e| Error::Io(e.to_string()))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }
}

/// Everything that depends on the size alone.
struct Cell {
    n: usize,
    lattice: Lattice,
    params: GibbsParams,
}

impl Cell {
    fn frame(&self, r: usize) -> Result<LocalFrame> {
        LocalFrame::new(&self.lattice, r)
    }
}

fn trend_check(name: &str, points: &[(f64, f64)], expected: Direction) -> Verdict {
    let verdict = stats::trend_verdict(points, expected, Z_SCORE);
    Verdict {
        check: name.to_string(),
        passed: verdict.passes(),
        flagged: verdict == TrendVerdict::Flat,
        detail: format!("expected {expected:?} (finite-size surrogate): {verdict:?}"),
    }
}

/// Direction implied by a driving quantity: strictly decreasing values expect
/// a decreasing probability, strictly increasing ones an increasing one.
fn implied_direction(values: &[f64]) -> Option<Direction> {
    if values.windows(2).all(|w| w[1] < w[0]) {
        Some(Direction::Decreasing)
    } else if values.windows(2).all(|w| w[1] > w[0]) {
        Some(Direction::Increasing)
    } else {
        None
    }
}

fn row(experiment: &str, cell: &Cell) -> ReportRow {
    ReportRow {
        experiment: experiment.to_string(),
        n: cell.n,
        a: cell.params.a(),
        b: cell.params.b(),
        big_r: None,
        ell: None,
        weight_id: String::new(),
        estimate: f64::NAN,
        se: 0.0,
        bound_low: None,
        bound_high: None,
        v: None,
        block_count: None,
        driving: None,
        verdict: String::new(),
    }
}

/// Runs a plan over its grid. Guard failures abort unless the plan is
/// exploratory; per-size failures are recorded and the run continues.
pub fn run_plan(plan: &ExperimentPlan) -> Result<ExperimentReport> {
    plan.validate()?;
    let mut cells = Vec::new();
    let mut anchors = Vec::new();
    for &n in &plan.n_grid {
        let lattice = Lattice::new(plan.spec(n))?;
        let frame = LocalFrame::new(&lattice, plan.r)?;
        let anchor = frame.parse_config(&plan.anchor)?;
        let params = match &plan.potentials {
            Potentials::Fixed { a, b } => GibbsParams::new(*a, *b)?,
            Potentials::Schedule { lambda, pair } => {
                solve_schedule(*lambda, &anchor, pair, plan.d, n, lattice.degree())?.params
            }
        };
        anchors.push(anchor);
        cells.push(Cell { n, lattice, params });
    }
    let degree = cells[0].lattice.degree();
    let mut report = ExperimentReport {
        name: plan.name.clone(),
        format: FORMAT_TAG.to_string(),
        exploratory: plan.exploratory,
        rows: Vec::new(),
        verdicts: Vec::new(),
        hypotheses: None,
        seed: plan.chain.seed,
    };
    if let Potentials::Schedule { .. } = plan.potentials {
        let grid: Vec<(usize, GibbsParams)> = cells.iter().map(|c| (c.n, c.params)).collect();
        let flags = check_hypotheses(&grid, degree, plan.divergence_threshold);
        if !flags.all_ok() && !plan.exploratory {
            return Err(Error::Hypothesis(format!(
                "schedule violates its guards (first a + 2Vb > 0 at {:?}, divergence surrogate {})",
                flags.first_failure, flags.divergence_ok
            )));
        }
        report.hypotheses = Some(flags);
    }

    match &plan.experiment {
        Experiment::AbsenceBounds {
            radius,
            epsilon,
            weight,
            sides,
            method,
        } => run_absence(plan, &cells, &anchors, radius, *epsilon, weight, *sides, *method, &mut report)?,
        Experiment::Poisson { min_distance_fraction } => {
            run_poisson(plan, &cells, &anchors, *min_distance_fraction, &mut report)?
        }
        Experiment::Distance { ring, pairs } => run_distance(plan, &cells, &anchors, ring, pairs, &mut report)?,
        Experiment::Ubiquity { method } => run_ubiquity(plan, &cells, &anchors, *method, &mut report)?,
    }
    report.rows.sort_by(|x, y| {
        (x.experiment.as_str(), x.n, x.big_r, x.ell).cmp(&(y.experiment.as_str(), y.n, y.big_r, y.ell))
    });
    Ok(report)
}

fn threshold_of(rule: &WeightRule, frame: &LocalFrame, anchor: &LocalConfig, p: &GibbsParams) -> Result<(f64, String)> {
    Ok(match rule {
        WeightRule::Anchor => (anchor.log_weight(p), format!("anchor {}", frame.record(anchor))),
        WeightRule::Config { record } => {
            let c = frame.parse_config(record)?;
            (c.log_weight(p), frame.record(&c))
        }
        WeightRule::Minimum => {
            let all = frame.enumerate(crate::configs::DEFAULT_ENUMERATION_CAP_LOG2)?;
            let lw = all.iter().map(|c| c.log_weight(p)).fold(f64::INFINITY, f64::min);
            (lw, "minimum".to_string())
        }
    })
}

#[allow(clippy::too_many_arguments)]
fn run_absence(
    plan: &ExperimentPlan,
    cells: &[Cell],
    anchors: &[LocalConfig],
    radius: &SizeRule,
    epsilon: f64,
    weight: &WeightRule,
    sides: BoundSides,
    method: EvalMethod,
    report: &mut ExperimentReport,
) -> Result<()> {
    let mut all_hold = true;
    for (cell, anchor) in cells.iter().zip(anchors) {
        let frame = cell.frame(plan.r)?;
        let big_r = radius.at(cell.n)?;
        let (log_w, weight_id) = threshold_of(weight, &frame, anchor, &cell.params)?;
        let evaluation = match method {
            EvalMethod::Exact => Evaluation::Exact,
            EvalMethod::Mcmc => Evaluation::Mcmc(plan.chain.clone()),
        };
        let mut r = row("absence_bounds", cell);
        r.big_r = Some(big_r);
        r.weight_id = weight_id;
        match geography::verify_absence_bounds(
            &cell.lattice,
            &frame,
            &cell.params,
            big_r,
            log_w,
            epsilon,
            sides,
            &evaluation,
        ) {
            Ok(rep) => {
                r.estimate = rep.estimate.mean;
                r.se = rep.estimate.std_error;
                r.bound_low = rep.lower;
                r.bound_high = Some(rep.upper);
                r.verdict = if rep.holds() { "pass" } else { "fail" }.into();
                all_hold &= rep.holds();
            }
            Err(Error::Hypothesis(msg)) if plan.exploratory => {
                r.verdict = format!("refused: {msg}");
            }
            Err(e) => return Err(e),
        }
        report.rows.push(r);
    }
    report.verdicts.push(Verdict {
        check: "absence_bounds".into(),
        passed: all_hold,
        flagged: false,
        detail: format!("{sides:?} bounds at every size"),
    });
    Ok(())
}

fn run_poisson(
    plan: &ExperimentPlan,
    cells: &[Cell],
    anchors: &[LocalConfig],
    min_fraction: Option<f64>,
    report: &mut ExperimentReport,
) -> Result<()> {
    let lambda = match plan.potentials {
        Potentials::Schedule { lambda, .. } => lambda,
        Potentials::Fixed { .. } => {
            return Err(Error::Hypothesis("Poisson comparison needs a solved schedule".into()))
        }
    };
    let mut tv_points = Vec::new();
    let mut distance_ok = true;
    let mut distance_flag = false;
    for (cell, anchor) in cells.iter().zip(anchors) {
        let frame = cell.frame(plan.r)?;
        geography::check_poisson_regime(&cell.lattice, &cell.params, anchor, lambda)?;
        let scan = OccurrenceScan::new(
            &cell.lattice,
            &frame,
            std::slice::from_ref(anchor),
            (0..cell.lattice.n_sites()).collect(),
        )?;
        let lattice = &cell.lattice;
        let out = sampler::run_chains(lattice, &cell.params, &plan.chain, |f| {
            let centers: Vec<usize> = scan.matches(f).map(|w| w.center).collect();
            let mut best: Option<usize> = None;
            for (i, &x) in centers.iter().enumerate() {
                for &y in &centers[i + 1..] {
                    let d = lattice.graph_distance(x, y);
                    best = Some(best.map_or(d, |b: usize| b.min(d)));
                }
            }
            (centers.len(), best)
        })?;
        let counts: Vec<Vec<usize>> = out
            .per_chain
            .iter()
            .map(|c| c.iter().map(|o| o.0).collect())
            .collect();
        let pr = geography::poisson_report(cell.n, lambda, &counts);
        let mut r = row("poisson_tv", cell);
        r.weight_id = format!("anchor {}", frame.record(anchor));
        r.estimate = pr.tv;
        r.se = pr.tv_se;
        r.driving = Some(pr.mean_count);
        r.verdict = "measured".into();
        report.rows.push(r);
        tv_points.push((pr.tv, pr.tv_se));

        if let Some(fraction) = min_fraction {
            let ratios: Vec<Vec<f64>> = out
                .per_chain
                .iter()
                .map(|c| c.iter().filter_map(|o| o.1.map(|d| d as f64 / cell.n as f64)).collect())
                .collect();
            let all: Vec<f64> = ratios.iter().flatten().copied().collect();
            let mut r = row("min_copy_distance", cell);
            r.weight_id = format!("anchor {}", frame.record(anchor));
            r.bound_low = Some(fraction);
            if all.len() < 2 {
                distance_flag = true;
                r.verdict = "inconclusive: fewer than two samples with two copies".into();
            } else {
                let mean = stats::mean(&all);
                let se = stats::batch_standard_error(&sampler::pooled_batch_means(&ratios));
                let ok = mean + Z_SCORE * se >= fraction;
                distance_ok &= ok;
                r.estimate = mean;
                r.se = se;
                r.driving = Some(all.len() as f64);
                r.verdict = if ok { "pass" } else { "fail" }.into();
            }
            report.rows.push(r);
        }
    }
    report
        .verdicts
        .push(trend_check("poisson_tv_trend", &tv_points, Direction::Decreasing));
    if let Some(fraction) = min_fraction {
        report.verdicts.push(Verdict {
            check: "min_copy_distance".into(),
            passed: distance_ok,
            flagged: distance_flag,
            detail: format!("min distance / n given at least two copies stays above {fraction} within {Z_SCORE} SE"),
        });
    }
    Ok(())
}

fn run_distance(
    plan: &ExperimentPlan,
    cells: &[Cell],
    anchors: &[LocalConfig],
    ring: &[SizeRule],
    pairs: &[PairSpec],
    report: &mut ExperimentReport,
) -> Result<()> {
    let d = plan.d as f64;
    let mut ring_points = vec![Vec::new(); ring.len()];
    let mut ring_driving = vec![Vec::new(); ring.len()];
    let mut pair_points = vec![Vec::new(); pairs.len()];
    let mut pair_driving = vec![Vec::new(); pairs.len()];
    for (cell, anchor) in cells.iter().zip(anchors) {
        let frame = cell.frame(plan.r)?;
        let all = frame.enumerate(crate::configs::DEFAULT_ENUMERATION_CAP_LOG2)?;
        let log_w = anchor.log_weight(&cell.params);
        let light = filter_by_weight(&all, &cell.params, log_w, WeightMode::AtMost);
        let exact = filter_by_weight(&all, &cell.params, log_w, WeightMode::Exactly);
        let mut events = Vec::new();
        let mut shapes = Vec::new();
        for rule in ring {
            let big_r = rule.at(cell.n)?;
            let centers = geography::ring_centers(&cell.lattice, &frame, 0, big_r)?;
            let scan = OccurrenceScan::new(&cell.lattice, &frame, &light.members, centers)?;
            events.push(scan.into_event(format!("ring R={big_r}")));
            shapes.push((big_r, None));
        }
        for spec in pairs {
            let big_r = spec.radius.at(cell.n)?;
            let ell = match spec.ell {
                SizeRule::SameAsRadius => big_r,
                ref other => other.at(cell.n)?,
            };
            let scan = PairScan::new(&cell.lattice, &frame, 0, big_r, ell, &exact.members)?;
            events.push(scan.into_event(format!("pair R={big_r} ell={ell}")));
            shapes.push((big_r, Some(ell)));
        }
        let settings = plan.chain.with_clamp(&frame.translate(&cell.lattice, anchor, 0))?;
        let refs: Vec<&_> = events.iter().collect();
        let estimates = sampler::estimate_events(&cell.lattice, &cell.params, &refs, &settings)?;
        for (j, (est, &(big_r, ell))) in estimates.iter().zip(&shapes).enumerate() {
            let (name, driving) = match ell {
                None => ("ring_occurrence", big_r as f64 * (log_w / d).exp()),
                Some(l) => ("pair_occurrence", big_r as f64 * l as f64 * (2.0 * log_w / d).exp()),
            };
            let mut r = row(name, cell);
            r.big_r = Some(big_r);
            r.ell = ell;
            r.weight_id = format!("anchor {}", frame.record(anchor));
            r.estimate = est.mean;
            r.se = geography::effective_se(est);
            r.driving = Some(driving);
            r.verdict = "measured".into();
            report.rows.push(r);
            if j < ring.len() {
                ring_points[j].push((est.mean, geography::effective_se(est)));
                ring_driving[j].push(driving);
            } else {
                pair_points[j - ring.len()].push((est.mean, geography::effective_se(est)));
                pair_driving[j - ring.len()].push(driving);
            }
        }
    }
    let push = |report: &mut ExperimentReport, name: String, points: &[(f64, f64)], driving: &[f64]| {
        let verdict = match implied_direction(driving) {
            Some(dir) => trend_check(&name, points, dir),
            None => Verdict {
                check: name,
                passed: false,
                flagged: true,
                detail: format!("driving quantity is not monotone on the grid: {driving:?}"),
            },
        };
        report.verdicts.push(verdict);
    };
    for (j, rule) in ring.iter().enumerate() {
        push(report, format!("ring_occurrence_trend[{rule:?}]"), &ring_points[j], &ring_driving[j]);
    }
    for (j, spec) in pairs.iter().enumerate() {
        push(
            report,
            format!("pair_occurrence_trend[{:?}, {:?}]", spec.radius, spec.ell),
            &pair_points[j],
            &pair_driving[j],
        );
    }
    Ok(())
}

fn run_ubiquity(
    plan: &ExperimentPlan,
    cells: &[Cell],
    anchors: &[LocalConfig],
    method: EvalMethod,
    report: &mut ExperimentReport,
) -> Result<()> {
    let mut blocks = Vec::new();
    let mut points = Vec::new();
    for (cell, anchor) in cells.iter().zip(anchors) {
        let b = BlockSpec::new(&cell.lattice)?;
        b.check_partition(&cell.lattice)?;
        points.push((cell.n, b.radius(), anchor.log_weight(&cell.params)));
        blocks.push(b);
    }
    let classified = ubiquity::classify_regime(plan.d, &points, RegimeThresholds::default());
    let (regime, driving) = match classified {
        Ok(x) => x,
        Err(e) if plan.exploratory => {
            report.verdicts.push(Verdict {
                check: "ubiquity_regime".into(),
                passed: true,
                flagged: true,
                detail: e.to_string(),
            });
            return Ok(());
        }
        Err(e) => return Err(e),
    };
    let (target_plus, direction, label) = match regime {
        Regime::Ubiquity => (true, Direction::Increasing, "all_plus"),
        Regime::Absence => (false, Direction::Increasing, "all_minus"),
        Regime::Presence => (false, Direction::Decreasing, "all_minus"),
    };
    let mut trend = Vec::new();
    for (((cell, anchor), b), q) in cells.iter().zip(anchors).zip(&blocks).zip(&driving) {
        let frame = cell.frame(plan.r)?;
        let map = BlockMap::new(&cell.lattice, &frame, b, *anchor)?;
        let target = BlockField::all(b.block_count(), target_plus);
        let evaluation = match method {
            EvalMethod::Exact => Evaluation::Exact,
            EvalMethod::Mcmc => Evaluation::Mcmc(plan.chain.clone()),
        };
        let est: Estimate = ubiquity::induced_probability(&cell.lattice, &cell.params, &map, &target, &evaluation)?;
        let se = geography::effective_se(&est);
        let mut r = row("ubiquity", cell);
        r.big_r = Some(b.radius());
        r.weight_id = format!("{label} anchor {}", frame.record(anchor));
        r.estimate = est.mean;
        r.se = se;
        r.v = Some(b.size.v);
        r.block_count = Some(b.block_count());
        r.driving = Some(match regime {
            Regime::Ubiquity => q.ubiquity,
            _ => q.occupancy,
        });
        r.verdict = format!("{regime:?}");
        report.rows.push(r);
        trend.push((est.mean, se));
    }
    report
        .verdicts
        .push(trend_check(&format!("ubiquity_trend[{label}]"), &trend, direction));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_anchor(n: usize) -> LocalConfig {
        let l = Lattice::new(LatticeSpec::new(2, n, Norm::Inf, 1)).unwrap();
        LocalFrame::new(&l, 1).unwrap().single_center_plus()
    }

    #[test]
    fn closed_form_inversion() {
        let eta = square_anchor(8);
        let s = solve_schedule(1.0, &eta, &PairRule::Constant { b: 0.0 }, 2, 32, 8).unwrap();
        assert!((s.params.a() + 32f64.ln()).abs() < 1e-12);
        let s2 = solve_schedule(1.0, &eta, &PairRule::Constant { b: 0.0 }, 2, 64, 8).unwrap();
        assert!((s2.params.a() - s.params.a() + 2f64.ln()).abs() < 1e-12);
        for n in [16, 32, 64] {
            let s = solve_schedule(2.0, &eta, &PairRule::Constant { b: 0.1 }, 2, n, 8).unwrap();
            assert!((s.occupancy - 2.0).abs() / 2.0 < 1e-12);
        }
        let l = Lattice::new(LatticeSpec::new(2, 8, Norm::Inf, 1)).unwrap();
        let neg = LocalFrame::new(&l, 1).unwrap().negative();
        assert!(matches!(
            solve_schedule(1.0, &neg, &PairRule::Constant { b: 0.0 }, 2, 8, 8),
            Err(Error::Unschedulable(_))
        ));
        assert!(solve_schedule(1000.0, &eta, &PairRule::Constant { b: 0.0 }, 2, 4, 8).is_err());
    }

    #[test]
    fn hypothesis_flags() {
        let grid: Vec<(usize, GibbsParams)> = [8usize, 16, 32]
            .iter()
            .map(|&n| (n, GibbsParams::new(-(n as f64).ln(), 0.0).unwrap()))
            .collect();
        assert!(check_hypotheses(&grid, 8, -1.0).all_ok());
        let growing: Vec<(usize, GibbsParams)> = [8usize, 16, 32]
            .iter()
            .enumerate()
            .map(|(i, &n)| (n, GibbsParams::new(-1.0, 0.05 * (i + 1) as f64).unwrap()))
            .collect();
        let flags = check_hypotheses(&growing, 8, -1.0);
        assert_eq!(flags.first_failure, Some(16));
        assert!(!flags.all_ok());
    }

    fn small_plan() -> ExperimentPlan {
        ExperimentPlan {
            format: FORMAT_TAG.into(),
            name: "absence".into(),
            d: 1,
            q: Norm::Inf,
            rho: 1,
            r: 1,
            n_grid: vec![9],
            anchor: "r=1:010".into(),
            potentials: Potentials::Fixed { a: -1.5, b: 0.1 },
            experiment: Experiment::AbsenceBounds {
                radius: SizeRule::Constant { value: 4 },
                epsilon: 0.5,
                weight: WeightRule::Minimum,
                sides: BoundSides::Sandwich,
                method: EvalMethod::Exact,
            },
            chain: ChainSettings::new(1, 100),
            exploratory: false,
            divergence_threshold: -1.0,
        }
    }

    #[test]
    fn plan_round_trip() {
        let plan = small_plan();
        let text = plan.to_toml().unwrap();
        let back = ExperimentPlan::from_toml(&text).unwrap();
        assert_eq!(plan, back);
        let a = run_plan(&plan).unwrap();
        let b = run_plan(&back).unwrap();
        assert_eq!(a.rows, b.rows);
        assert!(a.passed());
        let mut csv = Vec::new();
        a.write_csv(&mut csv).unwrap();
        assert!(String::from_utf8(csv).unwrap().starts_with("experiment,n,a,b,R,"));
    }

    #[test]
    fn format_tag_is_checked() {
        let mut plan = small_plan();
        plan.format = "other/9".into();
        assert!(ExperimentPlan::from_toml(&toml::to_string(&plan).unwrap()).is_err());
    }

    #[test]
    fn guards_refuse_non_exploratory_runs() {
        let mut plan = small_plan();
        plan.potentials = Potentials::Fixed { a: -0.1, b: 0.1 };
        assert!(matches!(run_plan(&plan), Err(Error::Hypothesis(_))));
        plan.exploratory = true;
        let rep = run_plan(&plan).unwrap();
        assert!(rep.rows[0].verdict.starts_with("refused"));
    }
}
