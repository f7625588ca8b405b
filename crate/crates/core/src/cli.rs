//! Experiment runner behind the `obsim` binary.
//!
//! Exit codes: 0 success, 2 invalid spec, 3 unreadable or ill-formed input
//! file, 4 output write failure.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{principle_of_observability, Task};
use crate::energy::{charge_energy, distributed_energy, total_energy, EnergySchedule};
use crate::error::Error;
use crate::machine::{CostLedger, ObservabilityOrder};
use crate::physics::{
    charge_sort_with_mode, DeflectionMode, DeflectionRecord, FieldConfig, Particle,
};

/// Header of every sweep CSV. Bit-exact.
pub const SWEEP_HEADER: &str =
    "task,n,k,invocations,rounds,stored_items,predicted_one_step,agreement";
pub const ENERGY_SUMMARY_HEADER: &str =
    "task,count,k,charge_energy,total_energy,per_observability,rounds";
pub const ENERGY_TABLE_HEADER: &str = "charge,energy_ev,cumulative_ev,per_observability_ev";

#[derive(Debug)]
pub enum CliError {
    InvalidSpec(String),
    Input(String),
    Write(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::InvalidSpec(_) => 2,
            CliError::Input(_) => 3,
            CliError::Write(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::InvalidSpec(msg) => write!(f, "invalid spec: {msg}"),
            CliError::Input(msg) => write!(f, "bad input: {msg}"),
            CliError::Write(msg) => write!(f, "write failed: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::InvalidSpec(e.to_string())
    }
}

fn write_err(e: io::Error) -> CliError {
    CliError::Write(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentTask {
    Min,
    #[serde(rename = "minmax")]
    #[value(name = "minmax")]
    MinMax,
    Sort,
    #[value(name = "charge_sort", alias = "charge-sort")]
    ChargeSort,
    Energy,
    Principle,
}

impl ExperimentTask {
    fn name(self) -> &'static str {
        match self {
            ExperimentTask::Min => "min",
            ExperimentTask::MinMax => "minmax",
            ExperimentTask::Sort => "sort",
            ExperimentTask::ChargeSort => "charge_sort",
            ExperimentTask::Energy => "energy",
            ExperimentTask::Principle => "principle",
        }
    }
}

/// Inclusive integer range, written `A..B` or `A` on the command line and
/// `[A, B]`, `"A..B"` or `A` in spec files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RangeRepr", into = "[usize; 2]")]
pub struct IntRange {
    pub start: usize,
    pub end: usize,
}

impl IntRange {
    pub fn single(v: usize) -> Self {
        Self { start: v, end: v }
    }

    pub fn iter(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.end
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start) + usize::from(self.start <= self.end)
    }

    pub fn is_empty(&self) -> bool {
        self.start > self.end
    }
}

impl From<IntRange> for [usize; 2] {
    fn from(r: IntRange) -> Self {
        [r.start, r.end]
    }
}

impl FromStr for IntRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|e| format!("bad range bound `{t}`: {e}"))
        };
        match s.split_once("..") {
            Some((a, b)) => Ok(Self {
                start: parse(a)?,
                end: parse(b.strip_prefix('=').unwrap_or(b))?,
            }),
            None => parse(s).map(Self::single),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RangeRepr {
    Pair([usize; 2]),
    Single(usize),
    Text(String),
}

impl TryFrom<RangeRepr> for IntRange {
    type Error = String;

    fn try_from(r: RangeRepr) -> Result<Self, String> {
        match r {
            RangeRepr::Pair([start, end]) => Ok(Self { start, end }),
            RangeRepr::Single(v) => Ok(Self::single(v)),
            RangeRepr::Text(s) => s.parse(),
        }
    }
}

/// One experiment: a task over an `(n, k)` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub task: ExperimentTask,
    #[serde(default)]
    pub n_range: Option<IntRange>,
    pub k_range: IntRange,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub input_path: Option<PathBuf>,
    #[serde(default)]
    pub schedule: Option<EnergySchedule>,
    #[serde(default)]
    pub allow_ties: bool,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), CliError> {
        let invalid = |m: String| Err(CliError::InvalidSpec(m));
        if self.k_range.is_empty() {
            return invalid(format!(
                "empty k range {}..{}",
                self.k_range.start, self.k_range.end
            ));
        }
        if self.k_range.start < 2 {
            return invalid(format!("k must be at least 2, got {}", self.k_range.start));
        }
        match self.task {
            ExperimentTask::Energy => {
                let schedule = self.schedule();
                schedule.validate()?;
                if self.k_range.start < schedule.count {
                    return invalid(format!(
                        "{} charges need k >= {}, range starts at {}",
                        schedule.count, schedule.count, self.k_range.start
                    ));
                }
            }
            ExperimentTask::ChargeSort if self.input_path.is_some() => {
                if self.n_range.is_some() {
                    return invalid("n comes from the particle file; drop the n range".into());
                }
            }
            _ => {
                let Some(n) = self.n_range else {
                    return invalid(format!("task {} needs an n range", self.task.name()));
                };
                if n.is_empty() {
                    return invalid(format!("empty n range {}..{}", n.start, n.end));
                }
                if n.start < 1 {
                    return invalid("n must be at least 1".into());
                }
                if self.task == ExperimentTask::ChargeSort && n.end > self.k_range.start {
                    return invalid(format!(
                        "charge_sort needs n <= k in every cell; n reaches {} but k starts at {}",
                        n.end, self.k_range.start
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn schedule(&self) -> EnergySchedule {
        self.schedule.unwrap_or(EnergySchedule::CONFINEMENT)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CellRow {
    pub task: &'static str,
    pub n: usize,
    pub k: usize,
    pub invocations: u64,
    pub rounds: u64,
    pub stored_items: u64,
    pub predicted_one_step: bool,
    pub agreement: bool,
}

impl CellRow {
    fn from_ledger(
        task: &'static str,
        n: usize,
        k: usize,
        ledger: CostLedger,
        agreement: bool,
    ) -> Self {
        Self {
            task,
            n,
            k,
            invocations: ledger.invocations(),
            rounds: ledger.rounds(),
            stored_items: ledger.stored_items(),
            predicted_one_step: k >= n,
            agreement,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyRow {
    pub count: usize,
    pub k: usize,
    pub charge_energy: f64,
    pub total_energy: f64,
    pub per_observability: f64,
    pub rounds: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ResultTable {
    Cells(Vec<CellRow>),
    Energy(Vec<EnergyRow>),
}

impl ResultTable {
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        match self {
            ResultTable::Cells(rows) => {
                writeln!(out, "{SWEEP_HEADER}")?;
                for r in rows {
                    writeln!(
                        out,
                        "{},{},{},{},{},{},{},{}",
                        r.task,
                        r.n,
                        r.k,
                        r.invocations,
                        r.rounds,
                        r.stored_items,
                        r.predicted_one_step,
                        r.agreement
                    )?;
                }
            }
            ResultTable::Energy(rows) => {
                writeln!(out, "{ENERGY_SUMMARY_HEADER}")?;
                for r in rows {
                    writeln!(
                        out,
                        "energy,{},{},{:.6},{:.6},{:.6},{}",
                        r.count,
                        r.k,
                        r.charge_energy,
                        r.total_energy,
                        r.per_observability,
                        r.rounds
                    )?;
                }
            }
        }
        Ok(())
    }
}

/// Keys for one input size, shared by every `k` in a sweep. Distinct unless
/// `allow_ties`.
pub fn generate_keys(n: usize, seed: u64, allow_ties: bool) -> Vec<u64> {
    let mut rng = cell_rng(seed, n);
    if allow_ties {
        let span = (n as u64 / 2).max(1);
        (0..n).map(|_| rng.gen_range(0..span)).collect()
    } else {
        let mut keys: Vec<u64> = (0..n as u64).collect();
        keys.shuffle(&mut rng);
        keys
    }
}

pub fn generate_particles(n: usize, seed: u64) -> Vec<Particle> {
    let mut rng = cell_rng(seed, n);
    (0..n)
        .map(|_| Particle {
            mass: rng.gen_range(0.5..5.0),
            charge: rng.gen_range(0.5..2.0),
            speed: rng.gen_range(0.5..2.0),
        })
        .collect()
}

fn cell_rng(seed: u64, n: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Particles plus optional field and mode, as read from a JSON document.
///
/// The document is either a bare array of particles or an object with a
/// `particles` array and optional `field` and `mode`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ParticleDocument {
    Bare(Vec<Particle>),
    Full {
        particles: Vec<Particle>,
        #[serde(default)]
        field: Option<FieldConfig>,
        #[serde(default)]
        mode: Option<DeflectionMode>,
    },
}

impl ParticleDocument {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let doc: Self = serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        for (i, p) in doc.particles().iter().enumerate() {
            p.validate()
                .map_err(|e| CliError::Input(format!("{}: particle {i}: {e}", path.display())))?;
        }
        if let Some(f) = doc.field() {
            f.validate()
                .map_err(|e| CliError::Input(format!("{}: field: {e}", path.display())))?;
        }
        Ok(doc)
    }

    pub fn particles(&self) -> &[Particle] {
        match self {
            ParticleDocument::Bare(p) | ParticleDocument::Full { particles: p, .. } => p,
        }
    }

    pub fn field(&self) -> Option<FieldConfig> {
        match self {
            ParticleDocument::Bare(_) => None,
            ParticleDocument::Full { field, .. } => *field,
        }
    }

    pub fn mode(&self) -> Option<DeflectionMode> {
        match self {
            ParticleDocument::Bare(_) => None,
            ParticleDocument::Full { mode, .. } => *mode,
        }
    }
}

const DEFAULT_FIELD: FieldConfig = FieldConfig {
    field_strength: 1.0,
    plate_length: 1.0,
    drift_distance: 0.0,
};

fn order(k: usize) -> Result<ObservabilityOrder, CliError> {
    ObservabilityOrder::new(k).map_err(CliError::from)
}

fn comparator_cell(
    task: Task,
    n: usize,
    k: usize,
    spec: &ExperimentSpec,
) -> Result<CellRow, CliError> {
    let keys = generate_keys(n, spec.seed, spec.allow_ties);
    let ledger = task.run(&keys, order(k)?)?;
    let agreement = principle_of_observability(n, order(k)?).agrees_with(ledger.invocations());
    let name = match task {
        Task::Min => "min",
        Task::MinMax => "minmax",
        Task::Sort => "sort",
    };
    Ok(CellRow::from_ledger(name, n, k, ledger, agreement))
}

fn principle_cell(n: usize, k: usize, spec: &ExperimentSpec) -> Result<CellRow, CliError> {
    let keys = generate_keys(n, spec.seed, spec.allow_ties);
    let principle = principle_of_observability(n, order(k)?);
    let mut agreement = true;
    let mut reported = CostLedger::new();
    for task in Task::ALL {
        let ledger = task.run(&keys, order(k)?)?;
        agreement &= principle.agrees_with(ledger.invocations());
        if task == Task::Min {
            reported = ledger;
        }
    }
    Ok(CellRow::from_ledger("principle", n, k, reported, agreement))
}

fn charge_cell(
    particles: &[Particle],
    field: &FieldConfig,
    mode: DeflectionMode,
    k: usize,
) -> Result<CellRow, CliError> {
    let n = particles.len();
    let mut ledger = CostLedger::new();
    charge_sort_with_mode(particles, field, mode, order(k)?, &mut ledger)?;
    let agreement = principle_of_observability(n, order(k)?).agrees_with(ledger.invocations());
    Ok(CellRow::from_ledger("charge_sort", n, k, ledger, agreement))
}

/// Runs every cell of the spec. Cells run in parallel; rows come back n-major,
/// then k.
pub fn run(spec: &ExperimentSpec) -> Result<ResultTable, CliError> {
    spec.validate()?;

    if spec.task == ExperimentTask::Energy {
        let schedule = spec.schedule();
        let rows = spec
            .k_range
            .iter()
            .map(|k| {
                let distributed = distributed_energy(&schedule, k)?;
                Ok(EnergyRow {
                    count: schedule.count,
                    k,
                    charge_energy: charge_energy(schedule.count, &schedule)?,
                    total_energy: total_energy(&schedule)?,
                    per_observability: distributed.per_observability,
                    rounds: distributed.rounds,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        return Ok(ResultTable::Energy(rows));
    }

    let loaded = match (&spec.input_path, spec.task) {
        (Some(path), ExperimentTask::ChargeSort) => Some(ParticleDocument::read(path)?),
        _ => None,
    };
    let n_range = match &loaded {
        Some(doc) => IntRange::single(doc.particles().len()),
        None => spec.n_range.expect("validated"),
    };
    if let Some(doc) = &loaded {
        if doc.particles().len() > spec.k_range.start || doc.particles().is_empty() {
            return Err(CliError::InvalidSpec(format!(
                "charge_sort needs 1 <= n <= k; file holds {} particles, k starts at {}",
                doc.particles().len(),
                spec.k_range.start
            )));
        }
    }

    let cells: Vec<(usize, usize)> = n_range
        .iter()
        .flat_map(|n| spec.k_range.iter().map(move |k| (n, k)))
        .collect();
    let rows = cells
        .par_iter()
        .map(|&(n, k)| match spec.task {
            ExperimentTask::Min => comparator_cell(Task::Min, n, k, spec),
            ExperimentTask::MinMax => comparator_cell(Task::MinMax, n, k, spec),
            ExperimentTask::Sort => comparator_cell(Task::Sort, n, k, spec),
            ExperimentTask::Principle => principle_cell(n, k, spec),
            ExperimentTask::ChargeSort => match &loaded {
                Some(doc) => charge_cell(
                    doc.particles(),
                    &doc.field().unwrap_or(DEFAULT_FIELD),
                    doc.mode().unwrap_or_default(),
                    k,
                ),
                None => charge_cell(
                    &generate_particles(n, spec.seed),
                    &DEFAULT_FIELD,
                    DeflectionMode::Electric,
                    k,
                ),
            },
            ExperimentTask::Energy => unreachable!("handled above"),
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(ResultTable::Cells(rows))
}

/// Writes the sweep table as CSV to `output`.
pub fn sweep_csv(spec: &ExperimentSpec, output: &Path) -> Result<(), CliError> {
    if spec.task == ExperimentTask::Energy {
        return Err(CliError::InvalidSpec(
            "energy rows do not fit the sweep header; use `run` or `energy`".into(),
        ));
    }
    let table = run(spec)?;
    let mut buf = Vec::new();
    table.write_csv(&mut buf).map_err(write_err)?;
    fs::write(output, buf).map_err(|e| CliError::Write(format!("{}: {e}", output.display())))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhysicsReport {
    pub k: usize,
    pub mode: DeflectionMode,
    pub field: FieldConfig,
    pub permutation: Vec<usize>,
    pub displacements: Vec<DeflectionRecord>,
    pub invocations: u64,
    pub rounds: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyTableRow {
    pub charge: usize,
    pub energy_ev: f64,
    pub cumulative_ev: f64,
    pub per_observability_ev: f64,
}

/// Per-charge energies with running total and its share per observer.
pub fn energy_table(
    schedule: &EnergySchedule,
    observers: usize,
) -> Result<Vec<EnergyTableRow>, CliError> {
    distributed_energy(schedule, observers)?;
    let mut cumulative = 0.0;
    (0..=schedule.count)
        .map(|i| {
            let energy_ev = charge_energy(i, schedule)?;
            cumulative += energy_ev;
            Ok(EnergyTableRow {
                charge: i,
                energy_ev,
                cumulative_ev: cumulative,
                per_observability_ev: cumulative / observers as f64,
            })
        })
        .collect()
}

#[derive(Debug, Parser)]
#[command(
    name = "obsim",
    version,
    about = "k-ary comparator machine experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one spec and print its table to stdout.
    Run(SpecArgs),
    /// Run an (n, k) grid and write the CSV table.
    Sweep {
        #[command(flatten)]
        spec: SpecArgs,
        /// Destination file; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Sort a JSON particle set in one device reading.
    Physics(PhysicsArgs),
    /// Print the per-charge energy table.
    Energy(EnergyArgs),
}

#[derive(Debug, Args)]
pub struct SpecArgs {
    /// JSON spec file; other spec flags are ignored when given.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub task: Option<ExperimentTask>,
    #[arg(long, conflicts_with = "n_range")]
    pub n: Option<usize>,
    #[arg(long, conflicts_with = "k_range")]
    pub k: Option<usize>,
    #[arg(long, value_name = "A..B")]
    pub n_range: Option<IntRange>,
    #[arg(long, value_name = "A..B")]
    pub k_range: Option<IntRange>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub base_energy: Option<f64>,
    #[arg(long)]
    pub growth_ratio: Option<f64>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub allow_ties: bool,
}

impl SpecArgs {
    pub fn resolve(&self) -> Result<ExperimentSpec, CliError> {
        if let Some(path) = &self.spec {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            return serde_json::from_str(&text)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())));
        }
        let task = self
            .task
            .ok_or_else(|| CliError::InvalidSpec("--task or --spec is required".into()))?;
        let schedule = (task == ExperimentTask::Energy).then(|| {
            let d = EnergySchedule::CONFINEMENT;
            EnergySchedule {
                base_energy: self.base_energy.unwrap_or(d.base_energy),
                growth_ratio: self.growth_ratio.unwrap_or(d.growth_ratio),
                count: self.count.unwrap_or(d.count),
            }
        });
        let k_range = match (self.k, self.k_range, &schedule) {
            (Some(k), _, _) => IntRange::single(k),
            (None, Some(r), _) => r,
            (None, None, Some(s)) => IntRange::single(s.count.max(2)),
            (None, None, None) => {
                return Err(CliError::InvalidSpec("--k or --k-range is required".into()))
            }
        };
        Ok(ExperimentSpec {
            task,
            n_range: self.n.map(IntRange::single).or(self.n_range),
            k_range,
            seed: self.seed,
            input_path: self.input.clone(),
            schedule,
            allow_ties: self.allow_ties,
        })
    }
}

#[derive(Debug, Args)]
pub struct PhysicsArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Comparator arity; defaults to the number of particles.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub field_strength: Option<f64>,
    #[arg(long)]
    pub plate_length: Option<f64>,
    #[arg(long)]
    pub drift_distance: Option<f64>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Electric,
    Magnetic,
}

impl From<ModeArg> for DeflectionMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Electric => DeflectionMode::Electric,
            ModeArg::Magnetic => DeflectionMode::Magnetic,
        }
    }
}

#[derive(Debug, Args)]
pub struct EnergyArgs {
    #[arg(long, default_value_t = 50.0)]
    pub base_energy: f64,
    #[arg(long, default_value_t = 1.3)]
    pub growth_ratio: f64,
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    /// Number of observers sharing the load; defaults to `count`.
    #[arg(long)]
    pub k: Option<usize>,
}

pub fn physics(args: &PhysicsArgs) -> Result<PhysicsReport, CliError> {
    let doc = ParticleDocument::read(&args.input)?;
    let base = doc.field().unwrap_or(DEFAULT_FIELD);
    let field = FieldConfig {
        field_strength: args.field_strength.unwrap_or(base.field_strength),
        plate_length: args.plate_length.unwrap_or(base.plate_length),
        drift_distance: args.drift_distance.unwrap_or(base.drift_distance),
    };
    field.validate()?;
    let mode = args
        .mode
        .map(DeflectionMode::from)
        .or(doc.mode())
        .unwrap_or_default();
    let k = args.k.unwrap_or(doc.particles().len().max(2));
    let mut ledger = CostLedger::new();
    let sorted = charge_sort_with_mode(doc.particles(), &field, mode, order(k)?, &mut ledger)?;
    Ok(PhysicsReport {
        k,
        mode,
        field,
        permutation: sorted.permutation,
        displacements: sorted.records,
        invocations: ledger.invocations(),
        rounds: ledger.rounds(),
    })
}

/// Dispatches one parsed command, writing results to `out`.
pub fn execute<W: Write>(cli: &Cli, mut out: W) -> Result<(), CliError> {
    match &cli.command {
        Command::Run(args) => {
            let table = run(&args.resolve()?)?;
            table.write_csv(&mut out).map_err(write_err)
        }
        Command::Sweep { spec, output } => {
            let spec = spec.resolve()?;
            match output {
                Some(path) => sweep_csv(&spec, path),
                None => {
                    if spec.task == ExperimentTask::Energy {
                        return Err(CliError::InvalidSpec(
                            "energy rows do not fit the sweep header; use `run` or `energy`".into(),
                        ));
                    }
                    run(&spec)?.write_csv(&mut out).map_err(write_err)
                }
            }
        }
        Command::Physics(args) => {
            let report = physics(args)?;
            serde_json::to_writer_pretty(&mut out, &report)
                .map_err(|e| CliError::Write(e.to_string()))?;
            writeln!(out).map_err(write_err)
        }
        Command::Energy(args) => {
            let schedule = EnergySchedule::new(args.base_energy, args.growth_ratio, args.count)?;
            let observers = args.k.unwrap_or(args.count.max(1));
            let rows = energy_table(&schedule, observers)?;
            writeln!(out, "{ENERGY_TABLE_HEADER}").map_err(write_err)?;
            for r in rows {
                writeln!(
                    out,
                    "{},{:.6},{:.6},{:.6}",
                    r.charge, r.energy_ev, r.cumulative_ev, r.per_observability_ev
                )
                .map_err(write_err)?;
            }
            Ok(())
        }
    }
}

pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let stdout = io::stdout();
    match execute(&cli, stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("obsim: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(task: ExperimentTask, n: &str, k: &str) -> ExperimentSpec {
        ExperimentSpec {
            task,
            n_range: Some(n.parse().unwrap()),
            k_range: k.parse().unwrap(),
            seed: 7,
            input_path: None,
            schedule: None,
            allow_ties: false,
        }
    }

    fn cells(table: ResultTable) -> Vec<CellRow> {
        match table {
            ResultTable::Cells(rows) => rows,
            ResultTable::Energy(_) => panic!("expected cell rows"),
        }
    }

    #[test]
    fn ranges_parse() {
        assert_eq!(
            "2..10".parse::<IntRange>().unwrap(),
            IntRange { start: 2, end: 10 }
        );
        assert_eq!(
            "3..=4".parse::<IntRange>().unwrap(),
            IntRange { start: 3, end: 4 }
        );
        assert_eq!("5".parse::<IntRange>().unwrap(), IntRange::single(5));
        assert!("a..3".parse::<IntRange>().is_err());
        assert_eq!(IntRange { start: 2, end: 10 }.len(), 9);
        assert!(IntRange { start: 4, end: 3 }.is_empty());
    }

    #[test]
    fn min_rows_for_three_items() {
        let rows = cells(run(&spec(ExperimentTask::Min, "3", "2..3")).unwrap());
        let inv: Vec<u64> = rows.iter().map(|r| r.invocations).collect();
        assert_eq!(inv, vec![2, 1]);
        assert!(rows.iter().all(|r| r.agreement));
        assert_eq!(
            (rows[0].predicted_one_step, rows[1].predicted_one_step),
            (false, true)
        );
    }

    #[test]
    fn single_item_costs_nothing() {
        let rows = cells(run(&spec(ExperimentTask::Min, "1", "2")).unwrap());
        assert_eq!(rows[0].invocations, 0);
        assert!(rows[0].agreement);
    }

    #[test]
    fn energy_row_carries_figures() {
        let mut s = spec(ExperimentTask::Energy, "1", "10");
        s.n_range = None;
        let ResultTable::Energy(rows) = run(&s).unwrap() else {
            panic!("expected energy rows");
        };
        let r = &rows[0];
        assert!((r.charge_energy - 689.29).abs() <= 0.01);
        assert!((r.total_energy - 2820.26).abs() <= 0.01);
        assert!((r.per_observability - 282.02).abs() <= 0.01);
        let mut csv = Vec::new();
        ResultTable::Energy(rows).write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(
            text.contains("689.29") && text.contains("2820.26") && text.contains("282.02"),
            "{text}"
        );
    }

    #[test]
    fn invalid_specs_exit_two() {
        let bad = [
            spec(ExperimentTask::Min, "1", "1..3"),
            spec(ExperimentTask::Min, "5..2", "2"),
            spec(ExperimentTask::ChargeSort, "1..5", "3"),
            ExperimentSpec {
                n_range: None,
                ..spec(ExperimentTask::Sort, "1", "2")
            },
        ];
        for s in bad {
            assert_eq!(run(&s).unwrap_err().exit_code(), 2, "{s:?}");
        }
        let mut e = spec(ExperimentTask::Energy, "1", "4");
        e.n_range = None;
        assert_eq!(run(&e).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn missing_input_exits_three() {
        let s = ExperimentSpec {
            n_range: None,
            input_path: Some("/nonexistent/particles.json".into()),
            ..spec(ExperimentTask::ChargeSort, "1", "4")
        };
        assert_eq!(run(&s).unwrap_err().exit_code(), 3);
    }

    #[test]
    fn principle_rows_agree() {
        let rows = cells(run(&spec(ExperimentTask::Principle, "1..12", "2..12")).unwrap());
        assert_eq!(rows.len(), 12 * 11);
        assert!(rows.iter().all(|r| r.agreement));
    }

    #[test]
    fn charge_sort_rows_are_single_readings() {
        let rows = cells(run(&spec(ExperimentTask::ChargeSort, "1..6", "6..8")).unwrap());
        assert!(rows
            .iter()
            .all(|r| r.invocations == 1 && r.rounds == 1 && r.agreement));
    }

    #[test]
    fn keys_distinct_by_default() {
        let mut keys = generate_keys(50, 3, false);
        keys.sort();
        assert_eq!(keys, (0..50).collect::<Vec<_>>());
        assert_eq!(generate_keys(50, 3, true), generate_keys(50, 3, true));
        assert_ne!(generate_keys(50, 3, false), generate_keys(50, 4, false));
    }

    #[test]
    fn spec_json_accepts_range_forms() {
        let s: ExperimentSpec = serde_json::from_str(
            r#"{"task": "minmax", "n_range": [2, 5], "k_range": "2..4", "seed": 9}"#,
        )
        .unwrap();
        assert_eq!(s.task, ExperimentTask::MinMax);
        assert_eq!(s.n_range, Some(IntRange { start: 2, end: 5 }));
        assert_eq!(s.k_range, IntRange { start: 2, end: 4 });
        let e: ExperimentSpec = serde_json::from_str(
            r#"{"task": "energy", "k_range": 10, "schedule": {"base_energy": 50, "growth_ratio": 1.3, "count": 10}}"#,
        )
        .unwrap();
        assert_eq!(e.schedule(), EnergySchedule::CONFINEMENT);
    }

    #[test]
    fn energy_table_final_row() {
        let rows = energy_table(&EnergySchedule::CONFINEMENT, 10).unwrap();
        assert_eq!(rows.len(), 11);
        assert_eq!(rows[0].energy_ev, 50.0);
        let last = rows.last().unwrap();
        assert!((last.cumulative_ev - 2820.26).abs() <= 0.01);
        assert!((last.per_observability_ev - 282.02).abs() <= 0.01);
    }
}
