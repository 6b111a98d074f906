//! `deltafinger` command line.
//!
//! Exit codes: 0 success, 1 usage/configuration/I-O error, 2 infeasible pose
//! or command (unreachable target, joint limit, FK failure), 3 empty
//! workspace, 4 mesh parse failure, 5 unreachable experiment trajectory.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::RunConfig;
use crate::device::{clamp_force, encode_command};
use crate::format::fixed9;
use crate::geometry::{JointAngles, Position};
use crate::harness::{run_ladder, trace_stats, LadderReport};
use crate::kinematics::{central_operating_pose, forward_kinematics, inverse_kinematics};
use crate::rendering::{load_mesh, render_force, RenderError};
use crate::workspace::{workspace_sample, WorkspaceError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_EMPTY_WORKSPACE: i32 = 3;
pub const EXIT_MESH: i32 = 4;
pub const EXIT_EXPERIMENT: i32 = 5;

#[derive(Debug, Parser)]
#[command(
    name = "deltafinger",
    version,
    about = "Delta haptic display kinematics, rendering and force experiments"
)]
struct Cli {
    /// Key-value configuration file; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV and report files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Noise seed; overrides `noise_seed` from the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Joint angles (rad) for an effector position (m).
    #[command(allow_negative_numbers = true)]
    Ik { x: f64, y: f64, z: f64 },
    /// Effector position (m) for joint angles (rad).
    #[command(allow_negative_numbers = true)]
    Fk { theta0: f64, theta1: f64, theta2: f64 },
    /// Sample the reachable workspace and write workspace.csv.
    Workspace,
    /// Render contact forces for a finger path (`t,x,y,z`) against a mesh.
    Render { mesh: PathBuf, path: PathBuf },
    /// Run the circular-trajectory force experiment over the radius ladder.
    Experiment,
    /// Print the servo command line for joint angles (rad).
    #[command(allow_negative_numbers = true)]
    Encode { theta0: f64, theta1: f64, theta2: f64 },
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl ToString) -> Self {
        Self {
            code,
            message: message.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure::new(EXIT_CONFIG, format!("{}: {e}", path.display()))
}

/// Parse `args` (including the program name) and run. Returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_CONFIG,
            };
            let sink: &mut dyn Write = if code == EXIT_OK { stdout } else { stderr };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    match execute(&cli, stdout) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(stderr, "{}", f.message);
            f.code
        }
    }
}

fn resolve_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(|e| Failure::new(EXIT_CONFIG, format!("config: {e}")))?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<(), Failure> {
    let cfg = resolve_config(cli)?;
    let out = |e: io::Error| Failure::new(EXIT_CONFIG, format!("stdout: {e}"));
    match &cli.command {
        Command::Ik { x, y, z } => {
            let p = Position::new(*x, *y, *z).map_err(|e| Failure::new(EXIT_CONFIG, e))?;
            let t = inverse_kinematics(&cfg.geometry, &p).map_err(|e| Failure::new(EXIT_INFEASIBLE, e))?;
            writeln!(stdout, "{} {} {}", fixed9(t[0]), fixed9(t[1]), fixed9(t[2])).map_err(out)
        }
        Command::Fk { theta0, theta1, theta2 } => {
            let t = JointAngles::new([*theta0, *theta1, *theta2]).map_err(|e| Failure::new(EXIT_CONFIG, e))?;
            let p = forward_kinematics(&cfg.geometry, &t).map_err(|e| Failure::new(EXIT_INFEASIBLE, e))?;
            writeln!(stdout, "{} {} {}", fixed9(p.x()), fixed9(p.y()), fixed9(p.z())).map_err(out)
        }
        Command::Encode { theta0, theta1, theta2 } => {
            let t = JointAngles::new([*theta0, *theta1, *theta2]).map_err(|e| Failure::new(EXIT_CONFIG, e))?;
            let line = encode_command(&t, &cfg.servo.limits).map_err(|e| Failure::new(EXIT_INFEASIBLE, e))?;
            stdout.write_all(&line).map_err(out)
        }
        Command::Workspace => cmd_workspace(&cfg, stdout),
        Command::Render { mesh, path } => cmd_render(&cfg, mesh, path, stdout),
        Command::Experiment => cmd_experiment(&cfg, stdout),
    }
}

fn create_out(cfg: &RunConfig, name: &str) -> Result<(PathBuf, BufWriter<File>), Failure> {
    fs::create_dir_all(&cfg.out_dir).map_err(|e| io_failure(&cfg.out_dir, e))?;
    let path = cfg.out_dir.join(name);
    let file = File::create(&path).map_err(|e| io_failure(&path, e))?;
    Ok((path, BufWriter::new(file)))
}

fn cmd_workspace(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<(), Failure> {
    let map = workspace_sample(&cfg.geometry, &cfg.grid).map_err(|e| match e {
        WorkspaceError::EmptyWorkspace => Failure::new(EXIT_EMPTY_WORKSPACE, e),
        other => Failure::new(EXIT_CONFIG, other),
    })?;
    let (path, mut w) = create_out(cfg, "workspace.csv")?;
    map.write_csv(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| io_failure(&path, e))?;
    writeln!(stdout, "z0={} disc_radius={}", fixed9(map.z0), fixed9(map.disc_radius))
        .map_err(|e| Failure::new(EXIT_CONFIG, e))
}

fn read_finger_path(path: &Path) -> Result<Vec<(f64, Position)>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.starts_with(|c: char| c.is_ascii_alphabetic())) {
            continue;
        }
        let bad = || {
            Failure::new(
                EXIT_CONFIG,
                format!("{}: line {}: expected `t,x,y,z`", path.display(), i + 1),
            )
        };
        let v: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad())?;
        if v.len() != 4 {
            return Err(bad());
        }
        let p = Position::new(v[1], v[2], v[3]).map_err(|_| bad())?;
        rows.push((v[0], p));
    }
    Ok(rows)
}

fn error_marker(e: &RenderError) -> String {
    match e {
        RenderError::PatchIncomplete(k) => format!("error:patch_incomplete({k})"),
        RenderError::NotOnSurface => "error:not_on_surface".into(),
        RenderError::DegeneratePatch => "error:degenerate_patch".into(),
        other => format!("error:{other}"),
    }
}

fn cmd_render(cfg: &RunConfig, mesh_path: &Path, path: &Path, stdout: &mut dyn Write) -> Result<(), Failure> {
    let mesh = load_mesh(mesh_path).map_err(|e| Failure::new(EXIT_MESH, format!("{}: {e}", mesh_path.display())))?;
    let finger = read_finger_path(path)?;
    let (pose, _) = central_operating_pose(&cfg.geometry).map_err(|e| Failure::new(EXIT_INFEASIBLE, e))?;

    let (out_path, mut w) = create_out(cfg, "render.csv")?;
    let io_err = |e: io::Error| io_failure(&out_path, e);
    writeln!(w, "t,fx,fy,fz,penetration,contact").map_err(io_err)?;
    let (mut contacts, mut errors, mut peak) = (0usize, 0usize, 0.0f64);
    for (t, p) in &finger {
        match render_force(&mesh, p, &cfg.render) {
            Ok(c) => {
                let f = clamp_force(&cfg.geometry, &pose, &c.vector, &cfg.servo)
                    .map_err(|e| Failure::new(EXIT_INFEASIBLE, e))?;
                contacts += usize::from(c.contact);
                peak = peak.max(f.norm());
                writeln!(
                    w,
                    "{},{},{},{},{},{}",
                    fixed9(*t),
                    fixed9(f.x),
                    fixed9(f.y),
                    fixed9(f.z),
                    fixed9(c.penetration),
                    u8::from(c.contact)
                )
                .map_err(io_err)?;
            }
            Err(e) => {
                errors += 1;
                writeln!(w, "{},,,,,{}", fixed9(*t), error_marker(&e)).map_err(io_err)?;
            }
        }
    }
    w.flush().map_err(io_err)?;
    writeln!(
        stdout,
        "samples={} contacts={} errors={} max_force={}",
        finger.len(),
        contacts,
        errors,
        fixed9(peak)
    )
    .map_err(|e| Failure::new(EXIT_CONFIG, e))
}

fn write_report(cfg: &RunConfig, report: &LadderReport, stdout: &mut dyn Write) -> Result<(), Failure> {
    for (i, entry) in report.entries.iter().enumerate() {
        let name = format!("trace_{i:02}_r{:.3}mm.csv", entry.radius * 1e3);
        let (path, mut w) = create_out(cfg, &name)?;
        entry
            .trace
            .write_csv(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| io_failure(&path, e))?;
    }

    let (csv_path, mut csv) = create_out(cfg, "stats.csv")?;
    let (txt_path, mut txt) = create_out(cfg, "stats.txt")?;
    let csv_err = |e: io::Error| io_failure(&csv_path, e);
    let txt_err = |e: io::Error| io_failure(&txt_path, e);
    writeln!(
        csv,
        "radius,samples,amp_x,amp_y,amp_z,mean_x,mean_y,mean_z,lateral_amplitude,mean_lateral_magnitude,delta,cycles"
    )
    .map_err(csv_err)?;
    writeln!(txt, "amplitude_estimator = half_range").map_err(txt_err)?;
    writeln!(txt, "delta_normalisation = lateral_amplitude").map_err(txt_err)?;
    writeln!(txt, "seed = {}", cfg.seed).map_err(txt_err)?;
    writeln!(txt, "noise_level = {}", fixed9(cfg.experiment.noise_level)).map_err(txt_err)?;
    for entry in &report.entries {
        let s = &entry.stats;
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            fixed9(entry.radius),
            s.samples,
            fixed9(s.amplitude[0]),
            fixed9(s.amplitude[1]),
            fixed9(s.amplitude[2]),
            fixed9(s.mean[0]),
            fixed9(s.mean[1]),
            fixed9(s.mean[2]),
            fixed9(s.lateral_amplitude),
            fixed9(s.mean_lateral_magnitude),
            fixed9(s.delta),
            entry.cycle_deltas.len()
        )
        .map_err(csv_err)?;
        writeln!(txt, "\n[radius {}]", fixed9(entry.radius)).map_err(txt_err)?;
        for (k, v) in [
            ("amplitude_x", s.amplitude[0]),
            ("amplitude_y", s.amplitude[1]),
            ("amplitude_z", s.amplitude[2]),
            ("mean_x", s.mean[0]),
            ("mean_y", s.mean[1]),
            ("mean_z", s.mean[2]),
            ("mean_lateral_magnitude", s.mean_lateral_magnitude),
            ("delta", s.delta),
        ] {
            writeln!(txt, "{k} = {}", fixed9(v)).map_err(txt_err)?;
        }
        writeln!(
            stdout,
            "radius={} delta={} amplitude={}",
            fixed9(entry.radius),
            fixed9(s.delta),
            fixed9(s.lateral_amplitude)
        )
        .map_err(|e| Failure::new(EXIT_CONFIG, e))?;
    }
    csv.flush().map_err(csv_err)?;
    txt.flush().map_err(txt_err)?;

    let (anova_path, mut a) = create_out(cfg, "anova.txt")?;
    let a_err = |e: io::Error| io_failure(&anova_path, e);
    let line = match &report.anova {
        Ok(r) => format!(
            "groups={} f={} p={} df_between={} df_within={} ss_between={} ss_within={}",
            report.entries.len(),
            fixed9(r.f),
            fixed9(r.p),
            r.df_between,
            r.df_within,
            fixed9(r.ss_between),
            fixed9(r.ss_within)
        ),
        Err(e) => format!("groups={} status=\"{e}\"", report.entries.len()),
    };
    writeln!(a, "{line}").and_then(|_| a.flush()).map_err(a_err)?;
    writeln!(stdout, "anova {line}").map_err(|e| Failure::new(EXIT_CONFIG, e))
}

fn cmd_experiment(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<(), Failure> {
    let report = run_ladder(&cfg.geometry, &cfg.servo, &cfg.experiment, cfg.seed).map_err(|e| {
        use crate::harness::HarnessError;
        match e.source {
            HarnessError::Unreachable { .. } => Failure::new(EXIT_EXPERIMENT, e),
            _ => Failure::new(EXIT_CONFIG, e),
        }
    })?;
    // Sanity: the whole-trace stats must be computable for every entry.
    for entry in &report.entries {
        trace_stats(&entry.trace).map_err(|e| Failure::new(EXIT_CONFIG, e))?;
    }
    write_report(cfg, &report, stdout)
}
