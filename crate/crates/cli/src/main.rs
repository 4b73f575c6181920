use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use cvsense::harness::{
    format_bands, run_monte_carlo, RunOutput, DEFAULT_HORIZON, DEFAULT_RUNS, DEFAULT_WINDOW,
};
use cvsense::oracle::{all_policy_values, optimal_policy, PolicyValue, SEARCH_CAP};
use cvsense::{fusion, LearnerState, PolicyKind, PolicyParams, RunConfig, Scenario, StepSizes};

#[derive(Parser)]
#[command(
    name = "cvsense",
    version,
    about = "Cooperative spectrum sensing and access simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one policy and write its metric series or summary.
    Run(RunArgs),
    /// Simulate the learned, genie and random policies on the same seeds.
    Compare(CompareArgs),
    /// Print the optimal sensing plan found by exhaustive search.
    Oracle(OracleArgs),
    /// Parse a scenario and report on it.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct SimArgs {
    /// Scenario file.
    #[arg(long)]
    scenario: PathBuf,
    /// Slots per run.
    #[arg(long, default_value_t = DEFAULT_HORIZON)]
    horizon: usize,
    /// Monte Carlo runs.
    #[arg(long, default_value_t = DEFAULT_RUNS)]
    runs: usize,
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Exploration probability.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Step size of the probability estimates.
    #[arg(long)]
    step_prob: Option<f64>,
    /// Step size of the rate estimates.
    #[arg(long)]
    step_rate: Option<f64>,
    /// Step size of the fairness averages.
    #[arg(long)]
    step_fair: Option<f64>,
    /// SUs per band while exploring.
    #[arg(long)]
    diversity: Option<usize>,
    /// Rate exponent of the access weight.
    #[arg(long)]
    theta: Option<f64>,
    /// Fairness exponent of the access weight.
    #[arg(long)]
    nu: Option<f64>,
    /// Override the scenario's collision limit.
    #[arg(long)]
    omega: Option<f64>,
    /// Window of the collision moving average, in slots.
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    window: usize,
    /// Grant no access during exploration slots.
    #[arg(long)]
    deny_exploration_access: bool,
    /// Output file; standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    sim: SimArgs,
    /// learned, genie or random.
    #[arg(long, default_value = "learned")]
    policy: PolicyKind,
    /// Start every run from this learner snapshot.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Save the learner state at the end of the first run.
    #[arg(long)]
    save_state: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    sim: SimArgs,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    omega: Option<f64>,
    /// Also list the best N plans.
    #[arg(long, default_value_t = 0)]
    top: usize,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    scenario: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Summary,
}

fn load(path: &Path, omega: Option<f64>) -> Result<Scenario> {
    let mut s =
        Scenario::load(path).with_context(|| format!("loading scenario {}", path.display()))?;
    if let Some(w) = omega {
        s.collision_limit = w;
        s.validate().context("applying --omega")?;
    }
    Ok(s)
}

fn config(sim: &SimArgs, policy: PolicyKind) -> Result<RunConfig> {
    let scenario = load(&sim.scenario, sim.omega)?;
    let mut c = RunConfig::new(scenario, policy);
    c.horizon = sim.horizon;
    c.runs = sim.runs;
    c.seed = sim.seed;
    c.window = sim.window;
    let defaults = StepSizes::default();
    c.steps = StepSizes {
        prob: sim.step_prob.unwrap_or(defaults.prob),
        rate: sim.step_rate.unwrap_or(defaults.rate),
        fair: sim.step_fair.unwrap_or(defaults.fair),
    };
    let p = PolicyParams::for_scenario(&c.scenario);
    c.params = PolicyParams {
        epsilon: sim.epsilon.unwrap_or(p.epsilon),
        diversity: sim.diversity.unwrap_or(p.diversity),
        theta: sim.theta.unwrap_or(p.theta),
        nu: sim.nu.unwrap_or(p.nu),
        deny_exploration_access: sim.deny_exploration_access,
        ..p
    };
    c.validate().context("invalid configuration")?;
    Ok(c)
}

fn write_out(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn render(out: &RunOutput, format: Format) -> String {
    match format {
        Format::Csv => out.series.to_csv(),
        Format::Summary => out.summary.to_text(),
    }
}

fn run(args: RunArgs) -> Result<()> {
    let mut c = config(&args.sim, args.policy)?;
    if let Some(path) = &args.resume {
        c.initial_state = Some(
            LearnerState::load(path)
                .with_context(|| format!("loading snapshot {}", path.display()))?,
        );
        c.validate().context("snapshot does not fit the scenario")?;
    }
    let out = run_monte_carlo(&c)?;
    if let Some(path) = &args.save_state {
        out.final_states[0]
            .save(path)
            .with_context(|| format!("saving snapshot {}", path.display()))?;
    }
    write_out(args.sim.output.as_deref(), &render(&out, args.sim.format))
}

fn compare(args: CompareArgs) -> Result<()> {
    let mut outs = Vec::new();
    for policy in [PolicyKind::Learned, PolicyKind::Genie, PolicyKind::Random] {
        let c = config(&args.sim, policy)?;
        outs.push(run_monte_carlo(&c)?);
    }
    let text = match args.sim.format {
        Format::Summary => outs
            .iter()
            .map(|o| o.summary.to_text())
            .collect::<Vec<_>>()
            .join("\n"),
        Format::Csv => {
            let mut s = String::from("slot,learned,genie,random\n");
            for t in 0..outs[0].series.len() {
                let [l, g, r] = [0, 1, 2].map(|p| outs[p].series.relative_rate[t]);
                writeln!(s, "{},{l},{g},{r}", t + 1).unwrap();
            }
            s
        }
    };
    write_out(args.sim.output.as_deref(), &text)
}

fn describe(v: &PolicyValue) -> String {
    let mut s = format!("expected_rate: {}\n", v.expected_rate);
    for &k in &v.plan.sensed_bands {
        let sensors: Vec<String> = v
            .plan
            .sensors(k)
            .iter()
            .map(|i| (i + 1).to_string())
            .collect();
        writeln!(
            s,
            "band {}: sensors {{{}}}, false_alarm {:.6}, psi {:.6}",
            k + 1,
            sensors.join(","),
            v.false_alarm[k].unwrap_or(0.0),
            v.per_band_psi[k]
        )
        .unwrap();
    }
    s
}

fn oracle(args: OracleArgs) -> Result<()> {
    let s = load(&args.scenario, args.omega)?;
    let best = optimal_policy(&s)?;
    print!("{}", describe(&best));
    if args.top > 0 {
        let mut all = all_policy_values(&s)?;
        all.sort_by(|a, b| b.expected_rate.total_cmp(&a.expected_rate));
        for (rank, v) in all.iter().take(args.top).enumerate() {
            let mask = v.plan.sensed_bands.iter().fold(0u64, |m, &k| m | 1 << k);
            println!("\n# rank {} senses {}", rank + 1, format_bands(mask));
            print!("{}", describe(v));
        }
    }
    Ok(())
}

fn plan_count(s: &Scenario) -> u128 {
    let mut per_su: u128 = 0;
    let mut choose: u128 = 1;
    for j in 0..=s.capacity.min(s.num_bands) {
        per_su += choose;
        choose = choose * (s.num_bands - j) as u128 / (j + 1) as u128;
    }
    per_su.saturating_pow(s.num_sus as u32)
}

fn validate(args: ValidateArgs) -> Result<()> {
    let s = load(&args.scenario, None)?;
    let target = s.target_detection();
    println!(
        "scenario: {} SUs, {} bands, collision limit {}, capacity {}",
        s.num_sus, s.num_bands, s.collision_limit, s.capacity
    );
    let mut warnings = 0;
    let plans = plan_count(&s);
    if plans > SEARCH_CAP as u128 {
        warnings += 1;
        println!("warn: {plans} sensing plans exceed the oracle search cap {SEARCH_CAP}; genie and relative rates unavailable");
    }
    if s.num_sus > fusion::ENUMERATION_CAP {
        warnings += 1;
        println!(
            "warn: {} SUs on one band exceed the fusion enumeration cap",
            s.num_sus
        );
    }
    if s.num_sus < 2 {
        warnings += 1;
        println!("warn: the default exploration diversity of 2 needs at least two SUs");
    }
    for k in 0..s.num_bands {
        let best = (0..s.num_sus)
            .map(|i| s.local_beta[(i, k)])
            .fold(0.0, f64::max);
        if best < target {
            println!(
                "note: band {} has no SU reaching detection {target} alone (best {best}); fusion will randomize",
                k + 1
            );
        }
    }
    if warnings == 0 {
        println!("ok");
    } else {
        println!("ok with {warnings} warning(s)");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Compare(a) => compare(a),
        Command::Oracle(a) => oracle(a),
        Command::Validate(a) => validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_count_matches_oracle_enumeration() {
        let s = Scenario::load(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../scenarios/paper_sec7"
        ))
        .unwrap();
        assert_eq!(plan_count(&s), 256);
        assert_eq!(cvsense::oracle::enumerate_plans(&s).unwrap().len(), 256);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
