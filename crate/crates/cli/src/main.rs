use std::fs::File;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use torus_gibbs::configs::DEFAULT_ENUMERATION_CAP_LOG2;
use torus_gibbs::experiment::{run_plan, ExperimentPlan};
use torus_gibbs::measure::{self, ExactMeasure};
use torus_gibbs::sampler::{self, ChainSettings};
use torus_gibbs::ubiquity::{self, BlockSpec};
use torus_gibbs::{EventPredicate, GibbsParams, Lattice, LatticeSpec, LocalFrame, Norm, SpinField};

#[derive(Parser)]
#[command(name = "torus-gibbs", version, about = "Ising-type Gibbs measures on the discrete torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct LatticeArgs {
    /// Dimension.
    #[arg(short, long, default_value_t = 1)]
    d: usize,
    /// Side length of the torus.
    #[arg(short, long, default_value_t = 9)]
    n: usize,
    /// Norm exponent (`inf` or a positive integer).
    #[arg(short, long, default_value = "inf")]
    q: Norm,
    /// Neighborhood radius.
    #[arg(long, default_value_t = 1)]
    rho: usize,
    /// Local configuration radius.
    #[arg(short, long, default_value_t = 1)]
    r: usize,
}

impl LatticeArgs {
    fn lattice(&self) -> Result<Lattice> {
        Ok(Lattice::new(LatticeSpec::new(self.d, self.n, self.q, self.rho))?)
    }
}

#[derive(Args, Clone)]
struct PotentialArgs {
    /// Magnetic field.
    #[arg(short, long, default_value_t = -1.0, allow_hyphen_values = true)]
    a: f64,
    /// Pair coupling.
    #[arg(short, long, default_value_t = 0.1)]
    b: f64,
}

impl PotentialArgs {
    fn params(&self) -> Result<GibbsParams> {
        Ok(GibbsParams::new(self.a, self.b)?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// List local configurations sorted by weight.
    Enumerate {
        #[command(flatten)]
        lattice: LatticeArgs,
        #[command(flatten)]
        potentials: PotentialArgs,
        /// Print at most this many configurations.
        #[arg(long, default_value_t = 20)]
        limit: usize,
    },
    /// Exact probabilities by enumeration of the whole torus.
    Exact {
        #[command(flatten)]
        lattice: LatticeArgs,
        #[command(flatten)]
        potentials: PotentialArgs,
        /// Configuration record for the occurrence event at the origin.
        #[arg(long)]
        eta: Option<String>,
    },
    /// Monte Carlo estimates from heat-bath chains.
    Mc {
        #[command(flatten)]
        lattice: LatticeArgs,
        #[command(flatten)]
        potentials: PotentialArgs,
        #[arg(long)]
        eta: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// Quick exhaustive invariant checks on a small torus.
    Verify {
        #[command(flatten)]
        lattice: LatticeArgs,
        #[command(flatten)]
        potentials: PotentialArgs,
    },
    /// Block decomposition of a size and the adequate sequence from it.
    Blocks {
        #[command(flatten)]
        lattice: LatticeArgs,
        /// Number of terms of the adequate sequence to print.
        #[arg(long, default_value_t = 4)]
        terms: usize,
    },
    /// Run a scenario file.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

fn events(lattice: &Lattice, frame: &LocalFrame, eta: Option<&str>) -> Result<Vec<EventPredicate>> {
    let mut out = vec![EventPredicate::site_plus(0).with_label("origin is +")];
    if let Some(record) = eta {
        let c = frame.parse_config(record)?;
        out.push(EventPredicate::occurrence(lattice, frame, &c, 0));
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Enumerate {
            lattice,
            potentials,
            limit,
        } => {
            let l = lattice.lattice()?;
            let p = potentials.params()?;
            let frame = LocalFrame::new(&l, lattice.r)?;
            let mut all = frame.enumerate(DEFAULT_ENUMERATION_CAP_LOG2)?;
            all.sort_by(|x, y| x.log_weight(&p).total_cmp(&y.log_weight(&p)).then(x.bits().cmp(&y.bits())));
            println!("{} configurations on a ball of {} sites", all.len(), frame.beta());
            println!("{:<24} {:>4} {:>6} {:>12}", "record", "k", "gamma", "log W");
            for c in all.iter().take(limit) {
                println!("{:<24} {:>4} {:>6} {:>12.6}", frame.record(c), c.k(), c.gamma(), c.log_weight(&p));
            }
        }
        Command::Exact {
            lattice,
            potentials,
            eta,
        } => {
            let l = lattice.lattice()?;
            let p = potentials.params()?;
            let frame = LocalFrame::new(&l, lattice.r)?;
            let m = ExactMeasure::new(&l, p)?;
            println!("log Z = {:.12}", m.log_partition());
            for e in events(&l, &frame, eta.as_deref())? {
                println!("P({}) = {:.12}", e.label(), m.probability(&e)?);
            }
        }
        Command::Mc {
            lattice,
            potentials,
            eta,
            seed,
            samples,
        } => {
            let l = lattice.lattice()?;
            let p = potentials.params()?;
            let frame = LocalFrame::new(&l, lattice.r)?;
            let settings = ChainSettings::new(seed, samples);
            let evs = events(&l, &frame, eta.as_deref())?;
            let refs: Vec<&EventPredicate> = evs.iter().collect();
            for (e, est) in evs.iter().zip(sampler::estimate_events(&l, &p, &refs, &settings)?) {
                println!(
                    "P({}) ~ {:.6} +- {:.6} (n_eff {:.0})",
                    e.label(),
                    est.mean,
                    est.std_error,
                    est.n_effective
                );
            }
        }
        Command::Verify { lattice, potentials } => return verify(&lattice, &potentials),
        Command::Blocks { lattice, terms } => {
            let l = lattice.lattice()?;
            let b = BlockSpec::new(&l)?;
            b.check_partition(&l)?;
            println!(
                "n = {} = 2^{} (2 * {} + 1): {} blocks of radius {}",
                lattice.n,
                b.size.v,
                b.radius(),
                b.block_count(),
                b.radius()
            );
            let seq = ubiquity::adequate_sequence(lattice.n, terms)?;
            let sizes: Vec<String> = seq.iter().map(|s| s.n.to_string()).collect();
            println!("adequate sequence: {}", sizes.join(", "));
        }
        Command::Run { scenario, csv, json } => {
            let plan = ExperimentPlan::load(&scenario).with_context(|| format!("loading {}", scenario.display()))?;
            let report = run_plan(&plan)?;
            if let Some(path) = csv {
                report.write_csv(File::create(&path)?)?;
            } else {
                report.write_csv(std::io::stdout())?;
            }
            if let Some(path) = json {
                std::fs::write(&path, report.to_json()?)?;
            }
            for v in &report.verdicts {
                let status = match (v.passed, v.flagged) {
                    (true, false) => "PASS",
                    (true, true) => "PASS (flagged)",
                    (false, true) => "INCONCLUSIVE",
                    (false, false) => "FAIL",
                };
                eprintln!("{status:<16} {}: {}", v.check, v.detail);
            }
            return Ok(!report.failed());
        }
    }
    Ok(true)
}

fn verify(lattice: &LatticeArgs, potentials: &PotentialArgs) -> Result<bool> {
    let l = lattice.lattice()?;
    let p = potentials.params()?;
    if l.n_sites() > 16 {
        bail!("verify enumerates the torus; use at most 16 sites");
    }
    let m = ExactMeasure::new(&l, p)?;
    let flipped = ExactMeasure::new(&l, GibbsParams::new(-p.a(), p.b())?)?;
    let mut ok = true;
    let mut report = |name: &str, pass: bool, detail: String| {
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        ok &= pass;
    };

    let total = m.log_total_mass();
    report("normalization", total.abs() < 1e-12, format!("log total mass {total:.3e}"));

    let n = l.n_sites();
    let mut worst: f64 = 0.0;
    for s in 0..m.n_states() {
        let dual = SpinField::from_state(n, s).flipped().state();
        worst = worst.max((m.log_prob_state(s) - flipped.log_prob_state(dual)).abs());
    }
    report("spin-flip duality", worst < 1e-12, format!("max deviation {worst:.3e}"));

    let frame = LocalFrame::new(&l, lattice.r)?;
    let eta = frame.single_center_plus();
    let lw = eta.log_weight(&p);
    let direct = m.probability(&EventPredicate::occurrence(&l, &frame, &eta, 0))?;
    let consts = measure::occurrence_constants(&frame);
    if p.satisfies_double(l.degree()) {
        let lo = (consts.log_lower + lw).exp();
        let hi = (consts.log_upper + lw).exp();
        let inside = direct >= lo * (1.0 - 1e-12) && direct <= hi * (1.0 + 1e-12);
        report(
            "occurrence bounds",
            inside,
            format!("{lo:.3e} <= {direct:.3e} <= {hi:.3e}"),
        );
    } else {
        println!("SKIP occurrence bounds: a + 2Vb > 0");
    }
    Ok(ok)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
