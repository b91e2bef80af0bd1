use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qbounce::units::{convert_units, Direction, Quantity};
use qbounce::{EigenBasis, UnitSystem};
use qbounce_cli::config::{parse_window, SpectrumSection};
use qbounce_cli::output::{num, read_scan, write_csv, write_json, Provenance};
use qbounce_cli::{pipeline, plot, presets, CliError, RunConfig};

#[derive(Parser)]
#[command(name = "qbounce", version, about = "Quantum bouncer echoes and gravitational-state spectroscopy")]
struct Cli {
    /// Override the configuration's random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Also write SVG plots next to the CSV files.
    #[arg(long, global = true)]
    plot: bool,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "QBOUNCE_THREADS")]
    threads: Option<usize>,
    /// Skip the doubled-basis convergence rerun.
    #[arg(long, global = true)]
    no_convergence: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
}

impl Source {
    fn load(&self) -> Result<RunConfig, CliError> {
        match (&self.config, &self.preset) {
            (Some(path), _) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
                RunConfig::parse(&text)
            }
            (None, Some(name)) => presets::preset(name),
            (None, None) => unreachable!("clap enforces one source"),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Eigenstate table: i, z_i, N_i, z_i1.
    Basis {
        #[arg(short = 'M', long = "M", default_value_t = qbounce::basis::DEFAULT_STATES)]
        states: usize,
        #[arg(long, default_value = "basis.csv")]
        out: PathBuf,
        /// Also write the position matrix <n|z|m>.
        #[arg(long)]
        matrix: Option<PathBuf>,
    },
    /// Classical ensemble with kicks: series.csv (+ summary.json).
    ClassicalEcho {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value = "series.csv")]
        out: PathBuf,
        /// Comma-separated times at which to dump (z, v, spin) of every particle.
        #[arg(long, alias = "snapshot", value_delimiter = ',')]
        snapshots: Vec<f64>,
    },
    /// Quantum wave packet with kicks: series.csv (+ summary.json).
    QuantumEcho {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value = "series.csv")]
        out: PathBuf,
    },
    /// Two-kick delay scan: scan.csv, and spectrum.csv/peaks.json when the config has a [spectrum] table.
    Scan {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value = "scan.csv")]
        out: PathBuf,
    },
    /// Spectrum and line matching of an existing scan CSV.
    Spectrum {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "spectrum.csv")]
        out: PathBuf,
        #[arg(long, default_value = "peaks.json")]
        peaks: PathBuf,
        #[arg(long, default_value = "hann")]
        window: String,
        #[arg(long, default_value_t = 8)]
        pad: usize,
        #[arg(long, default_value_t = qbounce::spectroscopy::DEFAULT_FLOOR)]
        floor: f64,
        #[arg(long, default_value_t = 5)]
        lines: usize,
        #[arg(short = 'M', long = "M", default_value_t = qbounce::basis::DEFAULT_STATES)]
        states: usize,
    },
    /// Least-squares retrieval of |P_1i| and phases from a scan CSV.
    Retrieve {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "retrieval.json")]
        out: PathBuf,
        #[arg(long, default_value_t = 5)]
        lines: usize,
        #[arg(short = 'M', long = "M", default_value_t = qbounce::basis::DEFAULT_STATES)]
        states: usize,
    },
    /// Convert between dimensionless and SI values.
    Convert {
        value: f64,
        /// length, time, energy, velocity or gradient
        #[arg(long)]
        quantity: String,
        /// Interpret the value as SI and convert to dimensionless.
        #[arg(long)]
        from_si: bool,
        /// Custom particle mass in kg (default: neutron).
        #[arg(long, requires = "gravity")]
        mass: Option<f64>,
        #[arg(long)]
        gravity: Option<f64>,
        /// J/T, for gradient conversions in a custom system.
        #[arg(long)]
        magnetic_moment: Option<f64>,
    },
    /// Print a built-in preset, or list them.
    Preset { name: Option<String> },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qbounce: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn command_line() -> String {
    std::env::args().collect::<Vec<_>>().join(" ")
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::config("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config(format!("thread pool: {e}")))?;
    }
    let out_dir = cli.out_dir.clone();
    std::fs::create_dir_all(&out_dir)?;
    let at = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { out_dir.join(p) };
    let prov = Provenance::new(command_line());

    match &cli.command {
        Command::Basis { states, out, matrix } => {
            let basis = EigenBasis::new(*states)?;
            let z1 = basis.zeros()[0];
            let rows = basis
                .zeros()
                .iter()
                .zip(basis.norms())
                .enumerate()
                .map(|(i, (z, n))| vec![(i + 1).to_string(), num(*z), num(*n), num(z - z1)]);
            write_csv(&at(out), &prov, &["i", "z_i", "N_i", "z_i1"], rows)?;
            if let Some(m) = matrix {
                let x = basis.position();
                let cols: Vec<String> = (1..=x.ncols()).map(|j| format!("m{j}")).collect();
                let mut header = vec!["n"];
                header.extend(cols.iter().map(String::as_str));
                let rows = (0..x.nrows())
                    .map(|i| std::iter::once((i + 1).to_string()).chain(x.row(i).iter().map(|v| num(*v))).collect());
                write_csv(&at(m), &prov, &header, rows)?;
            }
        }
        Command::ClassicalEcho { source, out, snapshots } => {
            let cfg = source.load()?;
            let run = pipeline::classical_echo(&cfg, cli.seed)?;
            let mut resolved = cfg.clone();
            resolved.seed = Some(run.seed);
            let prov = prov
                .note(format!("escaped particles: {}", run.series.escaped))
                .with_config(resolved.to_toml());
            let s = &run.series;
            write_series(&at(out), &prov, &s.times, &[&s.spin_up, &s.spin_down, &s.average], None)?;
            summarize(&cfg, &s.times, &s.average, &at(out).with_file_name("summary.json"))?;
            if cli.plot {
                plot::line_plot(
                    &at(out).with_extension("svg"),
                    "classical ensemble <z>(t)",
                    ("t", "<z>"),
                    &s.times,
                    &[("spin average", &s.average)],
                )?;
            }
            if !snapshots.is_empty() {
                let snaps = pipeline::classical_snapshots(&run, &cfg, snapshots)?;
                let rows = snaps.iter().flat_map(|snap| {
                    snap.particles.iter().map(move |(z, v, s)| {
                        vec![num(snap.time), num(*z), num(*v), if s.sign() > 0.0 { "+1".into() } else { "-1".into() }]
                    })
                });
                write_csv(&at(Path::new("snapshots.csv")), &prov, &["t", "z", "v", "s"], rows)?;
                if cli.plot {
                    for snap in &snaps {
                        let pts: Vec<(f64, f64)> = snap.particles.iter().map(|p| (p.0, p.1)).collect();
                        plot::scatter_plot(
                            &at(Path::new(&format!("phase_space_t{}.svg", snap.time))),
                            &format!("phase space at t = {}", snap.time),
                            ("z", "v"),
                            &pts,
                        )?;
                    }
                }
            }
        }
        Command::QuantumEcho { source, out } => {
            let cfg = source.load()?;
            let run = pipeline::quantum_echo(&cfg, !cli.no_convergence)?;
            let mut prov = prov.note(format!("states: {}, captured norm {:.12}", run.states, run.captured_norm));
            for w in &run.warnings {
                eprintln!("warning: {w}");
                prov = prov.note(format!("warning: {w}"));
            }
            if let Some(c) = &run.convergence {
                eprintln!("{}", c.describe());
                prov = prov.note(c.describe());
            }
            let prov = prov.with_config(cfg.to_toml());
            let t = &run.trace;
            let norm: Vec<f64> = t.norm_error.iter().map(|e| 1.0 - e).collect();
            write_series(
                &at(out),
                &prov,
                &t.times,
                &[&t.spin_up, &t.spin_down, &t.average],
                Some(&norm),
            )?;
            summarize(&cfg, &t.times, &t.average, &at(out).with_file_name("summary.json"))?;
            if cli.plot {
                plot::line_plot(
                    &at(out).with_extension("svg"),
                    "quantum <z>(t)",
                    ("t", "<z>"),
                    &t.times,
                    &[("spin average", &t.average)],
                )?;
            }
        }
        Command::Scan { source, out } => {
            let cfg = source.load()?;
            let run = pipeline::delay_scan(&cfg, !cli.no_convergence)?;
            let mut prov = prov.note(format!("states: {}", run.states));
            if let Some(c) = &run.convergence {
                eprintln!("{}", c.describe());
                prov = prov.note(c.describe());
            }
            let flagged = run.scan.flagged.iter().filter(|f| **f).count();
            if flagged > 0 {
                prov = prov.note(format!("{flagged} delays have overlapping pulses (flagged = 1)"));
            }
            let prov = prov.with_config(cfg.to_toml());
            let s = &run.scan;
            let rows = s
                .delays
                .iter()
                .zip(&s.populations)
                .zip(&s.flagged)
                .map(|((t, p), f)| vec![num(*t), num(*p), u8::from(*f).to_string()]);
            write_csv(&at(out), &prov, &["tau", "population", "flagged"], rows)?;
            if cli.plot {
                plot::line_plot(
                    &at(out).with_extension("svg"),
                    "ground-state population vs delay",
                    ("tau", "|c1|^2"),
                    &s.delays,
                    &[("population", &s.populations)],
                )?;
            }
            if let Some(section) = &cfg.spectrum {
                spectrum_outputs(&s.delays, &s.populations, section, run.states, &prov, &at, cli.plot)?;
            }
        }
        Command::Spectrum { input, out, peaks, window, pad, floor, lines, states } => {
            parse_window(window)?;
            let table = read_scan(input)?;
            let section = SpectrumSection { window: window.clone(), pad: *pad, floor: *floor, lines: *lines };
            let files = (out.as_path(), peaks.as_path());
            let prov = prov.note(format!("input: {}", input.display()));
            spectrum_files(&table.delays, &table.populations, &section, *states, &prov, files, &at, cli.plot)?;
        }
        Command::Retrieve { input, out, lines, states } => {
            let table = read_scan(input)?;
            let r = pipeline::retrieve(&table.delays, &table.populations, *lines, *states)?;
            println!("|P11| = {:.6}, fit residual {:.3e}, condition {:.3e}", r.ground, r.residual_rms, r.condition);
            for a in &r.amplitudes {
                println!("i = {}: |P_1i| = {:.6}, phase = {:+.6} (mod pi)", a.i, a.magnitude, a.phase);
            }
            write_json(&at(out), &RetrievalJson::from(&r))?;
        }
        Command::Convert { value, quantity, from_si, mass, gravity, magnetic_moment } => {
            let units = match (mass, gravity) {
                (Some(m), Some(g)) => UnitSystem::new(*m, *g, *magnetic_moment)?,
                (None, None) => UnitSystem::neutron(),
                _ => return Err(CliError::config("give both --mass and --gravity for a custom system")),
            };
            let q: Quantity = quantity.parse()?;
            let dir = if *from_si { Direction::ToDimensionless } else { Direction::ToSi };
            println!("{}", num(convert_units(&units, *value, dir, q)?));
        }
        Command::Preset { name } => match name {
            Some(n) => print!("{}", presets::source(n)?),
            None => {
                for n in presets::names() {
                    println!("{n}");
                }
            }
        },
    }
    Ok(())
}

fn write_series(
    path: &Path,
    prov: &Provenance,
    times: &[f64],
    columns: &[&Vec<f64>; 3],
    norm: Option<&[f64]>,
) -> Result<(), CliError> {
    let mut header = vec!["t", "z_up", "z_down", "z_avg"];
    if norm.is_some() {
        header.push("norm");
    }
    let rows = (0..times.len()).map(|k| {
        let mut row = vec![num(times[k]), num(columns[0][k]), num(columns[1][k]), num(columns[2][k])];
        if let Some(n) = norm {
            row.push(num(n[k]));
        }
        row
    });
    write_csv(path, prov, &header, rows)
}

fn summarize(cfg: &RunConfig, times: &[f64], values: &[f64], path: &Path) -> Result<(), CliError> {
    let Some(tk) = pipeline::echo_kick_time(cfg) else { return Ok(()) };
    let Some(s) = pipeline::echo_summary(times, values, pipeline::envelope_window(cfg), tk) else {
        return Ok(());
    };
    println!(
        "echo: envelope max {:.4} at t = {:.2}{}; dead zone [{:.0}, {:.0}] mean {:.4}, max {:.4}",
        s.echo_value,
        s.echo_time,
        if s.echo_interior { "" } else { " (window edge)" },
        1.5 * tk,
        1.8 * tk,
        s.dead_zone_mean,
        s.dead_zone_max
    );
    if let (Some(t), Some(v)) = (s.recurrence_time, s.recurrence_value) {
        println!("recurrence: envelope max {v:.4} at t = {t:.2}");
    }
    write_json(path, &s)
}

#[allow(clippy::too_many_arguments)]
fn spectrum_files(
    delays: &[f64],
    pops: &[f64],
    section: &SpectrumSection,
    states: usize,
    prov: &Provenance,
    files: (&Path, &Path),
    at: &dyn Fn(&Path) -> PathBuf,
    plot: bool,
) -> Result<(), CliError> {
    let run = pipeline::analyze_spectrum(delays, pops, section, states)?;
    let sp = &run.spectrum;
    let rows = sp.frequencies.iter().zip(&sp.amplitudes).map(|(w, a)| vec![num(*w), num(*a)]);
    write_csv(&at(files.0), prov, &["omega", "amplitude"], rows)?;
    let peaks: Vec<PeakJson> = run
        .report
        .matches
        .iter()
        .map(|m| PeakJson { i: m.i, omega_measured: m.measured, omega_theory: m.theory, rel_error_percent: m.relative_error_percent })
        .collect();
    write_json(&at(files.1), &peaks)?;
    for p in &peaks {
        println!(
            "z_{}1: measured {:.5}, theory {:.5}, error {:+.4}%",
            p.i, p.omega_measured, p.omega_theory, p.rel_error_percent
        );
    }
    if let Some(w) = &run.report.warning {
        eprintln!("warning: {w}");
    }
    if plot {
        let svg = at(files.0).with_extension("svg");
        plot::line_plot(&svg, "delay-scan spectrum", ("omega", "|FFT|"), &sp.frequencies, &[("amplitude", &sp.amplitudes)])?;
    }
    Ok(())
}

fn spectrum_outputs(
    delays: &[f64],
    pops: &[f64],
    section: &SpectrumSection,
    states: usize,
    prov: &Provenance,
    at: &dyn Fn(&Path) -> PathBuf,
    plot: bool,
) -> Result<(), CliError> {
    let files = (Path::new("spectrum.csv"), Path::new("peaks.json"));
    spectrum_files(delays, pops, section, states, prov, files, at, plot)
}

#[derive(serde::Serialize)]
struct PeakJson {
    i: usize,
    omega_measured: f64,
    omega_theory: f64,
    rel_error_percent: f64,
}

#[derive(serde::Serialize)]
struct RetrievalJson {
    ground_amplitude: f64,
    residual_rms: f64,
    condition: f64,
    phase_ambiguity: f64,
    amplitudes: Vec<AmplitudeJson>,
}

#[derive(serde::Serialize)]
struct AmplitudeJson {
    i: usize,
    magnitude: f64,
    phase: f64,
}

impl From<&qbounce::spectroscopy::Retrieval> for RetrievalJson {
    fn from(r: &qbounce::spectroscopy::Retrieval) -> Self {
        Self {
            ground_amplitude: r.ground,
            residual_rms: r.residual_rms,
            condition: r.condition,
            phase_ambiguity: r.phase_ambiguity,
            amplitudes: r.amplitudes.iter().map(|a| AmplitudeJson { i: a.i, magnitude: a.magnitude, phase: a.phase }).collect(),
        }
    }
}
