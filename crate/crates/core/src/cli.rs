//! Command-line front end.
//!
//! [`run`] parses arguments, merges an optional config file, runs one
//! subcommand on a sized thread pool and returns the process exit code:
//! 0 on success, 1 when a computation or verification fails, 2 on usage
//! errors.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chern::{refine_until_stable, ChernOptions, DEFAULT_GAP_FLOOR, DEFAULT_MESH, MIN_START_MESH};
use crate::error::Error;
use crate::model::{ControlPoint, TripletModel};
use crate::quantum::{count_bands, spectrum_csv, sweep_j, SweepReport};
use crate::spectral::{find_degeneracies, min_discriminant, DEFAULT_DISC_TOL, SEARCH_DENSITY};
use crate::walls::{
    build_domain_chart, delta_chern, two_sided_check, wall_catalog, wall_distance, wall_polylines, Axis, ChartBox,
    ChartOptions, WallCrossing, WallId, TWO_SIDED_OFFSET,
};

/// Environment variable overriding the worker thread count.
pub const THREADS_ENV: &str = "CHERNWALL_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "chernwall",
    version,
    about = "Chern numbers and degeneracy walls of a three-state rovibrational model"
)]
pub struct Cli {
    /// TOML or JSON file with default values for any option.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Worker threads (default: all cores, or $CHERNWALL_THREADS).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Emit JSON instead of text; errors carry an `error_code`.
    #[arg(long, global = true)]
    pub json: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the six degeneracy walls.
    Walls {
        /// Locate the walls at `a=<value>` or `b=<value>`.
        #[arg(long)]
        at: Option<String>,
    },
    /// Chern numbers at one control point.
    Chern(PointArgs),
    /// Iso-Chern domain chart over a box.
    PhaseDiagram(PhaseArgs),
    /// Chern number change across a wall.
    Delta(DeltaArgs),
    /// Quantum band counts at one or more J.
    Quantum(QuantumArgs),
    /// Run the built-in verification checks.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct PointArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
    /// Starting mesh size (cells per cube edge).
    #[arg(long, short = 'M')]
    pub mesh: Option<usize>,
    #[arg(long)]
    pub gap_floor: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PhaseArgs {
    /// a_min a_max b_min b_max
    #[arg(long = "box", num_args = 4, allow_hyphen_values = true, value_names = ["A_MIN", "A_MAX", "B_MIN", "B_MAX"])]
    pub bbox: Option<Vec<f64>>,
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long, short = 'M')]
    pub mesh: Option<usize>,
    /// Write the chart JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write wall polylines (CSV) here.
    #[arg(long)]
    pub walls_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DeltaArgs {
    /// Wall id: a=+1/3, a=-1/3, b=+1, b=-1, c2+ or c2-.
    #[arg(long)]
    pub wall: String,
    /// Crossing location, `a=<value>` or `b=<value>`.
    #[arg(long, allow_hyphen_values = true)]
    pub at: String,
    /// Direction: +a, -a, +b, -b or `da,db`.
    #[arg(long, allow_hyphen_values = true)]
    pub dir: String,
    /// Also compare with direct Chern numbers on both sides.
    #[arg(long)]
    pub check: bool,
    #[arg(long, short = 'M')]
    pub mesh: Option<usize>,
}

#[derive(Debug, Args)]
pub struct QuantumArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
    /// `N` or an inclusive range `N..M`.
    #[arg(long = "J", short = 'J')]
    pub j: Option<String>,
    /// Mesh for the semi-quantum prediction.
    #[arg(long, short = 'M')]
    pub mesh: Option<usize>,
    /// Write the spectrum CSV here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Quick,
    Full,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub level: Option<Level>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, short = 'M')]
    pub mesh: Option<usize>,
}

/// Values that may come from a config file. Command-line flags win.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub a: Option<f64>,
    pub b: Option<f64>,
    #[serde(alias = "M")]
    pub mesh: Option<usize>,
    #[serde(rename = "box")]
    pub bbox: Option<[f64; 4]>,
    pub step: Option<f64>,
    #[serde(alias = "J")]
    pub j: Option<String>,
    pub gap_floor: Option<f64>,
    pub disc_tol: Option<f64>,
    pub threads: Option<usize>,
    pub seed: Option<u64>,
    pub level: Option<Level>,
    pub format: Option<String>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e == "json") || text.trim_start().starts_with('{');
        if is_json {
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
        } else {
            toml::from_str(&text).map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(m) = self.mesh {
            check_mesh(m)?;
        }
        for (name, v) in [
            ("gap_floor", self.gap_floor),
            ("disc_tol", self.disc_tol),
            ("step", self.step),
        ] {
            if let Some(v) = v {
                if !(v > 0.0) {
                    return Err(CliError::Usage(format!("{name} must be positive, got {v}")));
                }
            }
        }
        if let Some(b) = self.bbox {
            box_from(&b)?;
        }
        if let Some(f) = &self.format {
            if f != "json" && f != "text" && f != "csv" {
                return Err(CliError::Usage(format!("unknown format '{f}'")));
            }
        }
        Ok(())
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    /// A verification check failed; the report has already been written.
    Verification,
    Compute(Error),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Compute(Error::InvalidInput(_) | Error::InvalidJ(_)) => EXIT_USAGE,
            _ => EXIT_FAILURE,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Verification => "verification_failed",
            CliError::Compute(e) => e.code(),
            CliError::Io(_) => "io",
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Verification => f.write_str("verification failed"),
            CliError::Compute(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Compute(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn check_mesh(m: usize) -> CliResult<usize> {
    if m < MIN_START_MESH {
        Err(CliError::Usage(format!(
            "mesh size must be >= {MIN_START_MESH}, got {m}"
        )))
    } else {
        Ok(m)
    }
}

fn box_from(v: &[f64]) -> CliResult<ChartBox> {
    let bbox = ChartBox {
        a_min: v[0],
        a_max: v[1],
        b_min: v[2],
        b_max: v[3],
    };
    bbox.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(bbox)
}

/// Parses `a=<v>` or `b=<v>`.
pub fn parse_location(s: &str) -> CliResult<(Axis, f64)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("expected a=<value> or b=<value>, got '{s}'")))?;
    let axis = match k.trim() {
        "a" => Axis::A,
        "b" => Axis::B,
        other => return Err(CliError::Usage(format!("unknown coordinate '{other}'"))),
    };
    let v: f64 = v
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("bad number in '{s}'")))?;
    Ok((axis, v))
}

/// Parses `+a`, `-a`, `+b`, `-b` or `da,db`.
pub fn parse_direction(s: &str) -> CliResult<[f64; 2]> {
    let d = match s.trim() {
        "+a" | "a" => [1.0, 0.0],
        "-a" => [-1.0, 0.0],
        "+b" | "b" => [0.0, 1.0],
        "-b" => [0.0, -1.0],
        other => {
            let parts: Vec<&str> = other.split(',').collect();
            let nums: Option<Vec<f64>> = parts.iter().map(|p| p.trim().parse().ok()).collect();
            match nums.as_deref() {
                Some([x, y]) => [*x, *y],
                _ => return Err(CliError::Usage(format!("bad direction '{s}'"))),
            }
        }
    };
    Ok(d)
}

/// Parses `N` or `N..M` (inclusive).
pub fn parse_j_range(s: &str) -> CliResult<Vec<u32>> {
    let bad = || CliError::Usage(format!("bad J '{s}', expected N or N..M"));
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: u32 = lo.trim().parse().map_err(|_| bad())?;
        let hi: u32 = hi.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        if lo > hi {
            return Err(CliError::Usage(format!("empty J range {s}")));
        }
        Ok((lo..=hi).collect())
    } else {
        Ok(vec![s.trim().parse().map_err(|_| bad())?])
    }
}

fn resolve_threads(flag: Option<usize>, cfg: Option<usize>) -> CliResult<Option<usize>> {
    let env = match std::env::var(THREADS_ENV) {
        Ok(v) => Some(
            v.parse::<usize>()
                .map_err(|_| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got '{v}'")))?,
        ),
        Err(_) => None,
    };
    let n = flag.or(env).or(cfg);
    if n == Some(0) {
        return Err(CliError::Usage("thread count must be positive".into()));
    }
    Ok(n)
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code. Normal output goes to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            if code == EXIT_OK {
                let _ = write!(out, "{e}");
            } else {
                let _ = write!(err, "{e}");
            }
            return code;
        }
    };
    let json = cli.json;
    match execute(cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            if json {
                let v = serde_json::json!({ "error_code": e.code(), "message": e.to_string() });
                let _ = writeln!(err, "{v}");
            } else if !matches!(e, CliError::Verification) {
                let _ = writeln!(err, "error[{}]: {e}", e.code());
            }
            e.exit_code()
        }
    }
}

fn execute(cli: Cli, out: &mut dyn Write) -> CliResult<()> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.validate()?;
    let json = cli.json || cfg.format.as_deref() == Some("json");
    let threads = resolve_threads(cli.threads, cfg.threads)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start thread pool: {e}")))?;
    // Output is buffered so the pool's closure only captures `Send` data.
    let mut buf = Vec::new();
    let ctx = Ctx {
        cfg,
        json,
        out: &mut buf,
    };
    let result = pool.install(move || ctx.dispatch(cli.command));
    out.write_all(&buf)?;
    result
}

struct Ctx<'a> {
    cfg: RunConfig,
    json: bool,
    out: &'a mut Vec<u8>,
}

impl Ctx<'_> {
    fn dispatch(mut self, command: Command) -> CliResult<()> {
        match command {
            Command::Walls { at } => self.walls(at.as_deref()),
            Command::Chern(args) => self.chern(&args),
            Command::PhaseDiagram(args) => self.phase_diagram(&args),
            Command::Delta(args) => self.delta(&args),
            Command::Quantum(args) => self.quantum(&args),
            Command::Verify(args) => self.verify(&args),
        }
    }

    fn emit_json<T: Serialize>(&mut self, value: &T) -> CliResult<()> {
        let s = serde_json::to_string_pretty(value).map_err(|e| CliError::Usage(e.to_string()))?;
        writeln!(self.out, "{s}")?;
        Ok(())
    }

    fn mesh(&self, flag: Option<usize>) -> CliResult<usize> {
        check_mesh(flag.or(self.cfg.mesh).unwrap_or(DEFAULT_MESH))
    }

    fn chern_options(&self, flag: Option<f64>) -> CliResult<ChernOptions> {
        let gap_floor = flag.or(self.cfg.gap_floor).unwrap_or(DEFAULT_GAP_FLOOR);
        if !(gap_floor > 0.0) {
            return Err(CliError::Usage(format!("gap floor must be positive, got {gap_floor}")));
        }
        Ok(ChernOptions {
            gap_floor,
            ..ChernOptions::default()
        })
    }

    fn point(&self, a: Option<f64>, b: Option<f64>) -> CliResult<ControlPoint> {
        let (Some(a), Some(b)) = (a.or(self.cfg.a), b.or(self.cfg.b)) else {
            return Err(CliError::Usage("both --a and --b are required".into()));
        };
        ControlPoint::checked(a, b).map_err(|e| CliError::Usage(e.to_string()))
    }

    fn walls(&mut self, at: Option<&str>) -> CliResult<()> {
        let loc = at.map(parse_location).transpose()?;
        #[derive(Serialize)]
        struct Entry {
            id: WallId,
            orbit: crate::symmetry::OrbitType,
            orbit_size: usize,
            condition: String,
            band_pair: Option<(usize, usize)>,
            location: Option<ControlPoint>,
        }
        let entries: Vec<Entry> = wall_catalog()
            .into_iter()
            .map(|w| {
                let location = loc.and_then(|(axis, v)| w.locate(axis, v));
                // The pair is fixed along each wall; evaluate at a sample point.
                let sample = location.or_else(|| match w.orbit {
                    crate::symmetry::OrbitType::C3 => w.point_at(0.0),
                    crate::symmetry::OrbitType::C4 => w.point_at(0.0),
                    crate::symmetry::OrbitType::C2 => w.point_at(if w.id == WallId::C2Upper { 1.5 } else { -1.5 }),
                });
                Entry {
                    id: w.id,
                    orbit: w.orbit,
                    orbit_size: w.orbit_size,
                    condition: w.condition.clone(),
                    band_pair: sample.map(|c| w.band_pair(c)),
                    location,
                }
            })
            .collect();
        if self.json {
            return self.emit_json(&entries);
        }
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<8} {:<5} {:>5}  {:<28} {:<7} location",
            "wall", "orbit", "size", "condition", "pair"
        );
        for e in &entries {
            let pair = e.band_pair.map_or("-".to_string(), |(i, j)| format!("({i},{j})"));
            let location = match (loc, e.location) {
                (None, _) => String::new(),
                (Some(_), Some(c)) => format!("a={:.12} b={:.12}", c.a, c.b),
                (Some(_), None) => "-".to_string(),
            };
            let _ = writeln!(
                s,
                "{:<8} {:<5} {:>5}  {:<28} {:<7} {}",
                e.id.name(),
                e.orbit.to_string(),
                e.orbit_size,
                e.condition,
                pair,
                location
            );
        }
        write!(self.out, "{s}")?;
        Ok(())
    }

    fn chern(&mut self, args: &PointArgs) -> CliResult<()> {
        let c = self.point(args.a, args.b)?;
        let mesh = self.mesh(args.mesh)?;
        let opts = self.chern_options(args.gap_floor)?;
        let rec = refine_until_stable(&TripletModel::new(c), mesh, &opts)?;
        if self.json {
            return self.emit_json(&rec);
        }
        writeln!(
            self.out,
            "C = ({})  at {c}  mesh {}  min gap {:.3e} at {}  max deviation {:.2e}",
            join(&rec.chern),
            rec.mesh_size,
            rec.min_gap,
            rec.min_gap_point,
            rec.max_deviation
        )?;
        Ok(())
    }

    fn phase_diagram(&mut self, args: &PhaseArgs) -> CliResult<()> {
        let bbox = match args
            .bbox
            .as_deref()
            .map(<[f64]>::to_vec)
            .or(self.cfg.bbox.map(|b| b.to_vec()))
        {
            Some(v) => box_from(&v)?,
            None => ChartBox::default(),
        };
        let step = args.step.or(self.cfg.step).unwrap_or(ChartOptions::default().step);
        if !(step > 0.0) {
            return Err(CliError::Usage(format!("step must be positive, got {step}")));
        }
        let opts = ChartOptions {
            step,
            mesh: self.mesh(args.mesh)?,
            chern: self.chern_options(None)?,
            ..ChartOptions::default()
        };
        let chart = build_domain_chart(bbox, &opts)?;
        if let Some(path) = args.walls_out.as_ref() {
            let mut csv = String::from("wall,a,b\n");
            for (id, pts) in wall_polylines(&bbox, step) {
                for p in pts {
                    let _ = writeln!(csv, "{},{:.12},{:.12}", id, p.a, p.b);
                }
            }
            std::fs::write(path, csv)?;
        }
        let out_path = args.out.clone().or(self.cfg.out.clone());
        if let Some(path) = out_path {
            let s = serde_json::to_string_pretty(&chart).map_err(|e| CliError::Usage(e.to_string()))?;
            std::fs::write(path, s + "\n")?;
        }
        if self.json {
            self.emit_json(&chart)?;
        } else {
            writeln!(
                self.out,
                "{} domains, {} adjacencies",
                chart.domains.len(),
                chart.adjacencies.len()
            )?;
            writeln!(
                self.out,
                "{:>3}  {:<8} {:>8} {:>8}  {:<14} {:<14} ok",
                "id", "sig", "a", "b", "propagated", "direct"
            )?;
            for d in &chart.domains {
                let prop = d.chern.as_deref().map_or("-".to_string(), |c| format!("({})", join(c)));
                writeln!(
                    self.out,
                    "{:>3}  {:<8} {:>8.3} {:>8.3}  {:<14} {:<14} {}",
                    d.id,
                    d.signature,
                    d.representative.a,
                    d.representative.b,
                    prop,
                    format!("({})", join(&d.direct_chern)),
                    if d.agrees() { "yes" } else { "NO" }
                )?;
            }
        }
        if chart.is_consistent() {
            Ok(())
        } else {
            Err(CliError::Verification)
        }
    }

    fn delta(&mut self, args: &DeltaArgs) -> CliResult<()> {
        let id: WallId = args.wall.parse().map_err(|e: Error| CliError::Usage(e.to_string()))?;
        let wall = id.wall();
        let (axis, v) = parse_location(&args.at)?;
        let c = wall
            .locate(axis, v)
            .ok_or_else(|| CliError::Usage(format!("wall {id} has no point with {}", args.at)))?;
        let dir = parse_direction(&args.dir)?;
        let crossing = delta_chern(&wall, c, dir)?;
        let check = if args.check {
            Some(two_sided_check(
                &crossing,
                TWO_SIDED_OFFSET,
                self.mesh(args.mesh)?,
                &self.chern_options(None)?,
            )?)
        } else {
            None
        };
        if self.json {
            #[derive(Serialize)]
            struct Out<'a> {
                crossing: &'a WallCrossing,
                #[serde(skip_serializing_if = "Option::is_none")]
                check: Option<&'a crate::walls::TwoSidedCheck>,
            }
            self.emit_json(&Out {
                crossing: &crossing,
                check: check.as_ref(),
            })?;
        } else {
            writeln!(
                self.out,
                "wall {} ({}, orbit {}) at a={:.9} b={:.9} dir ({:.4}, {:.4}): delta C = ({})  pair ({},{})  local sign {:+}",
                crossing.wall,
                crossing.orbit,
                crossing.orbit_size,
                crossing.point.a,
                crossing.point.b,
                crossing.direction[0],
                crossing.direction[1],
                join(&crossing.delta),
                crossing.band_pair.0,
                crossing.band_pair.1,
                crossing.local_sign
            )?;
            if let Some(ch) = &check {
                writeln!(
                    self.out,
                    "two-sided: before ({}) after ({}) observed ({}) {}",
                    join(&ch.before.chern),
                    join(&ch.after.chern),
                    join(&ch.observed_delta),
                    if ch.agrees { "agrees" } else { "DISAGREES" }
                )?;
            }
        }
        match check {
            Some(ch) if !ch.agrees => Err(CliError::Verification),
            _ => Ok(()),
        }
    }

    fn quantum(&mut self, args: &QuantumArgs) -> CliResult<()> {
        let c = self.point(args.a, args.b)?;
        let j_spec = args
            .j
            .clone()
            .or(self.cfg.j.clone())
            .ok_or_else(|| CliError::Usage("--J is required".into()))?;
        let js = parse_j_range(&j_spec)?;
        if let Some(&bad) = js.iter().find(|&&j| j < 1) {
            return Err(CliError::Compute(Error::InvalidJ(bad)));
        }
        let mesh = self.mesh(args.mesh)?;
        let prediction = refine_until_stable(&TripletModel::new(c), mesh, &self.chern_options(None)?);
        let expected = prediction.as_ref().ok().map(|r| r.chern.clone());
        let report = sweep_j(c, &js, expected.as_deref());
        if let Some(path) = &args.csv {
            let counts: Vec<_> = report.entries.iter().filter_map(|e| e.count.clone()).collect();
            std::fs::write(path, spectrum_csv(&counts))?;
        }
        if self.json {
            self.emit_json(&report)?;
        } else {
            self.print_sweep(&report, prediction.as_ref().err())?;
        }
        let all_match = expected.is_some() && report.entries.iter().all(|e| e.matches());
        if all_match {
            Ok(())
        } else {
            Err(CliError::Verification)
        }
    }

    fn print_sweep(&mut self, report: &SweepReport, prediction_error: Option<&Error>) -> CliResult<()> {
        match (&report.expected_chern, prediction_error) {
            (Some(c), _) => writeln!(
                self.out,
                "semi-quantum Chern numbers at {}: ({})",
                report.control,
                join(c)
            )?,
            (None, Some(e)) => writeln!(self.out, "no semi-quantum prediction at {}: {e}", report.control)?,
            (None, None) => {}
        }
        writeln!(self.out, "{:>4}  {:<16} {:<14} match", "J", "counts", "implied C")?;
        for e in &report.entries {
            match (&e.count, &e.error) {
                (Some(q), _) => {
                    let counts: Vec<i64> = q.counts.iter().map(|&n| n as i64).collect();
                    writeln!(
                        self.out,
                        "{:>4}  {:<16} {:<14} {}",
                        e.j,
                        format!("({})", join(&counts)),
                        format!("({})", join(&q.implied_chern())),
                        match q.matches {
                            Some(true) => "yes",
                            Some(false) => "no",
                            None => "-",
                        }
                    )?;
                }
                (None, Some(msg)) => writeln!(self.out, "{:>4}  {msg}", e.j)?,
                (None, None) => {}
            }
        }
        if let Some(j) = report.j_star {
            writeln!(self.out, "counts match from J = {j}")?;
        }
        Ok(())
    }

    fn verify(&mut self, args: &VerifyArgs) -> CliResult<()> {
        let level = args.level.or(self.cfg.level).unwrap_or(Level::Quick);
        let seed = args.seed.or(self.cfg.seed).unwrap_or(0);
        let mesh = self.mesh(args.mesh.or(Some(32)))?;
        let checks = run_checks(level, seed, mesh);
        let ok = checks.iter().all(|c| c.passed);
        if self.json {
            self.emit_json(&checks)?;
        } else {
            for c in &checks {
                writeln!(
                    self.out,
                    "{} {}: {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                )?;
            }
        }
        if ok {
            Ok(())
        } else {
            Err(CliError::Verification)
        }
    }
}

fn join(v: &[i64]) -> String {
    v.iter().map(|x| format!("{x:+}")).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, result: Result<String, String>) -> Check {
    match result {
        Ok(detail) => Check {
            name: name.into(),
            passed: true,
            detail,
        },
        Err(detail) => Check {
            name: name.into(),
            passed: false,
            detail,
        },
    }
}

/// The `verify` checks. `quick` covers wall oracles, the central domain and
/// the `J = 10` counts; `full` adds the domain chart and two-sided crossings.
pub fn run_checks(level: Level, seed: u64, mesh: usize) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    let mut on_wall = Vec::new();
    for w in wall_catalog() {
        for _ in 0..5 {
            let s = match w.id {
                WallId::C2Upper => rng.gen_range(0.3..2.5),
                WallId::C2Lower => rng.gen_range(-2.5..-0.3),
                _ => rng.gen_range(-2.0..2.0),
            };
            if let Some(c) = w.point_at(s) {
                on_wall.push((w.id, c));
            }
        }
    }
    out.push(check(
        "wall discriminants",
        on_wall
            .iter()
            .try_fold(0.0f64, |worst, (id, c)| match min_discriminant(*c, SEARCH_DENSITY) {
                Ok(m) if m.value <= 1e-10 => Ok(worst.max(m.value)),
                Ok(m) => Err(format!("{id} at {c}: {:.3e}", m.value)),
                Err(e) => Err(format!("{id} at {c}: {e}")),
            })
            .map(|w| format!("{} points, max {:.2e}", on_wall.len(), w)),
    ));

    out.push(check(
        "orbit sizes",
        [
            (ControlPoint::new(1.0 / 3.0, 0.0), 6),
            (ControlPoint::new(0.0, 1.0), 8),
            (ControlPoint::new(1.0 / 18.0, 1.5), 12),
        ]
        .iter()
        .try_for_each(|&(c, n)| {
            let found = find_degeneracies(c, DEFAULT_DISC_TOL).map_err(|e| e.to_string())?;
            if found.len() == n {
                Ok(())
            } else {
                Err(format!("{c}: {} points, expected {n}", found.len()))
            }
        })
        .map(|()| "6, 8, 12".into()),
    ));

    let centre = refine_until_stable(
        &TripletModel::new(ControlPoint::new(0.0, 0.0)),
        mesh,
        &ChernOptions::default(),
    );
    out.push(check(
        "central Chern numbers",
        match centre {
            Ok(r) if r.chern == [-2, 0, 2] => Ok(format!("({})", join(&r.chern))),
            Ok(r) => Err(format!("got ({})", join(&r.chern))),
            Err(e) => Err(e.to_string()),
        },
    ));

    out.push(check(
        "quantum counts J=10",
        match count_bands(10, ControlPoint::new(0.0, 0.0), Some(&[-2, 0, 2])) {
            Ok(q) if q.matches == Some(true) => Ok(format!("{:?}", q.counts)),
            Ok(q) => Err(format!("{:?}", q.counts)),
            Err(e) => Err(e.to_string()),
        },
    ));

    if level == Level::Full {
        let chart = build_domain_chart(
            ChartBox::default(),
            &ChartOptions {
                mesh,
                ..ChartOptions::default()
            },
        );
        match chart {
            Ok(chart) => {
                out.push(check(
                    "domain count",
                    if chart.domains.len() == 15 {
                        Ok("15".into())
                    } else {
                        Err(format!("{}", chart.domains.len()))
                    },
                ));
                out.push(check(
                    "propagation",
                    if chart.is_consistent() {
                        Ok(format!("{} adjacencies consistent", chart.adjacencies.len()))
                    } else {
                        Err("propagated and direct triples differ".into())
                    },
                ));
            }
            Err(e) => out.push(check("domain chart", Err(e.to_string()))),
        }
        for w in wall_catalog() {
            let s = match w.id {
                WallId::C2Upper => 1.5,
                WallId::C2Lower => -1.5,
                _ => 0.0,
            };
            let c = w.point_at(s).expect("sample parameter lies on the wall");
            let n = w.normal(c);
            let r = delta_chern(&w, c, n)
                .and_then(|x| two_sided_check(&x, TWO_SIDED_OFFSET, mesh, &ChernOptions::default()).map(|t| (x, t)));
            out.push(check(
                &format!("two-sided {}", w.id),
                match r {
                    Ok((x, t)) if t.agrees => Ok(format!("({})", join(&x.delta))),
                    Ok((x, t)) => Err(format!(
                        "predicted ({}) observed ({})",
                        join(&x.delta),
                        join(&t.observed_delta)
                    )),
                    Err(e) => Err(e.to_string()),
                },
            ));
        }
        let far = (0..200)
            .map(|_| ControlPoint::new(rng.gen_range(-1.2..1.2), rng.gen_range(-2.5..2.5)))
            .filter(|c| wall_distance(*c) >= 0.05)
            .take(10)
            .collect::<Vec<_>>();
        out.push(check(
            "off-wall discriminants",
            far.iter()
                .try_for_each(|c| match min_discriminant(*c, SEARCH_DENSITY) {
                    Ok(m) if m.value >= 1e-6 => Ok(()),
                    Ok(m) => Err(format!("{c}: {:.3e}", m.value)),
                    Err(e) => Err(e.to_string()),
                })
                .map(|()| format!("{} points", far.len())),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn locations_and_directions() {
        assert_eq!(parse_location("b=1.5").unwrap(), (Axis::B, 1.5));
        assert_eq!(parse_location("a = -0.2").unwrap(), (Axis::A, -0.2));
        assert!(parse_location("c=1").is_err());
        assert_eq!(parse_direction("-b").unwrap(), [0.0, -1.0]);
        assert_eq!(parse_direction("1,2").unwrap(), [1.0, 2.0]);
        assert!(parse_direction("up").is_err());
    }

    #[test]
    fn j_ranges() {
        assert_eq!(parse_j_range("10").unwrap(), vec![10]);
        assert_eq!(parse_j_range("2..6").unwrap(), vec![2, 3, 4, 5, 6]);
        assert!(parse_j_range("6..2").is_err());
        assert!(parse_j_range("x").is_err());
    }

    #[test]
    fn config_validation() {
        let cfg = RunConfig {
            mesh: Some(4),
            ..RunConfig::default()
        };
        assert_eq!(cfg.validate().unwrap_err().exit_code(), EXIT_USAGE);
        let cfg = RunConfig {
            bbox: Some([1.0, 0.0, 0.0, 1.0]),
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_err());
        assert!(RunConfig::default().validate().is_ok());
    }

    #[test]
    fn config_formats() {
        let dir = tempfile::tempdir().unwrap();
        let t = dir.path().join("c.toml");
        std::fs::write(&t, "a = 0.5\nM = 32\nbox = [-1.0, 1.0, -2.0, 2.0]\n").unwrap();
        let cfg = RunConfig::load(&t).unwrap();
        assert_eq!(cfg.a, Some(0.5));
        assert_eq!(cfg.mesh, Some(32));
        let j = dir.path().join("c.json");
        std::fs::write(&j, r#"{"b": -1.5, "J": "2..4"}"#).unwrap();
        let cfg = RunConfig::load(&j).unwrap();
        assert_eq!(cfg.b, Some(-1.5));
        assert_eq!(cfg.j.as_deref(), Some("2..4"));
        std::fs::write(&j, r#"{"bogus": 1}"#).unwrap();
        assert!(RunConfig::load(&j).is_err());
    }
}
