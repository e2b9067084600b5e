mod plot;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use omnitrack::experiment::{self, ExperimentConfig, ExperimentError};
use omnitrack::planning::{astar, Cell, PlanningError};
use omnitrack::simlab::{SimError, StepAxis};

use plot::{BarChart, LineChart, Series};

#[derive(Parser)]
#[command(name = "omnitrack", version, about = "Trajectory planning and tracking experiments for a four-wheel omni-drive robot")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML); built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the config `out` key.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run independent episodes on separate threads.
    #[arg(long)]
    parallel: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Plan and sample a reference trajectory on a map.
    Plan {
        #[command(flatten)]
        common: Common,
        /// Map file; the bundled standard map when omitted.
        #[arg(long)]
        map: Option<PathBuf>,
        /// Start cell as COL,ROW.
        #[arg(long, value_parser = parse_cell)]
        start: Option<Cell>,
        /// Goal cell as COL,ROW.
        #[arg(long, value_parser = parse_cell)]
        goal: Option<Cell>,
        /// Total trajectory time in seconds.
        #[arg(long)]
        time: Option<f64>,
        /// Sample period in seconds.
        #[arg(long)]
        ts: Option<f64>,
    },
    /// Track the planned reference with the configured controllers.
    Track {
        #[command(flatten)]
        common: Common,
        /// Enable feedback noise.
        #[arg(long)]
        noise: bool,
    },
    /// Unit step responses in x, y and heading.
    Step {
        #[command(flatten)]
        common: Common,
    },
    /// NMPC tracking error against prediction horizon length.
    Horizon {
        #[command(flatten)]
        common: Common,
        /// Horizon lengths, comma separated; the config list when omitted.
        #[arg(long, value_delimiter = ',')]
        np: Option<Vec<usize>>,
    },
}

fn parse_cell(s: &str) -> Result<Cell, String> {
    let (c, r) = s.split_once(',').ok_or_else(|| format!("expected COL,ROW, got `{s}`"))?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("`{v}`: {e}"));
    Ok(Cell::new(parse(c)?, parse(r)?))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if is_no_path(&e) {
                eprintln!("error: no path found ({e})");
                ExitCode::from(2)
            } else {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        }
    }
}

fn is_no_path(e: &ExperimentError) -> bool {
    matches!(
        e,
        ExperimentError::Planning(PlanningError::NoPath { .. }) | ExperimentError::Sim(SimError::Planning(PlanningError::NoPath { .. }))
    )
}

fn load(common: &Common) -> Result<(ExperimentConfig, PathBuf), ExperimentError> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out = out.clone();
    }
    let out = cfg.out.clone();
    std::fs::create_dir_all(&out).map_err(|e| ExperimentError::io(&out, e))?;
    Ok((cfg, out))
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), ExperimentError> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| ExperimentError::io(path, e))
}

fn finish(cfg: &ExperimentConfig, out: &Path) -> Result<(), ExperimentError> {
    write(out, "config.toml", &cfg.to_toml_string())
}

fn run(command: Command) -> Result<(), ExperimentError> {
    match command {
        Command::Plan {
            common,
            map,
            start,
            goal,
            time,
            ts,
        } => {
            let (mut cfg, out) = load(&common)?;
            if let Some(m) = map {
                cfg.map = Some(m);
            }
            if let Some(c) = start {
                cfg.start = [c.col, c.row];
            }
            if let Some(c) = goal {
                cfg.goal = [c.col, c.row];
            }
            cfg.total_time = time.unwrap_or(cfg.total_time);
            cfg.ts = ts.unwrap_or(cfg.ts);
            cfg.validate()?;
            cmd_plan(&cfg, &out)
        }
        Command::Track { common, noise } => {
            let (mut cfg, out) = load(&common)?;
            cfg.noise |= noise;
            cmd_track(&cfg, &out, common.parallel)
        }
        Command::Step { common } => {
            let (cfg, out) = load(&common)?;
            cmd_step(&cfg, &out, common.parallel)
        }
        Command::Horizon { common, np } => {
            let (mut cfg, out) = load(&common)?;
            if let Some(np) = np {
                cfg.horizons = np;
            }
            cmd_horizon(&cfg, &out, common.parallel)
        }
    }
}

fn cmd_plan(cfg: &ExperimentConfig, out: &Path) -> Result<(), ExperimentError> {
    let grid = cfg.grid()?;
    let path = astar(&grid, cfg.start_cell(), cfg.goal_cell())?;
    let trajectory = cfg.trajectory()?;
    write(out, "trajectory.csv", &trajectory.to_csv())?;

    let res = grid.resolution();
    let mut boxes = Vec::new();
    for row in 0..grid.height() {
        for col in 0..grid.width() {
            let c = Cell::new(col, row);
            if grid.is_occupied(c) {
                let [x, y] = grid.world_of(c);
                boxes.push([x - 0.5 * res, y - 0.5 * res, x + 0.5 * res, y + 0.5 * res]);
            }
        }
    }
    let [ox, oy] = grid.origin();
    let outline = vec![
        [ox - 0.5 * res, oy - 0.5 * res],
        [ox + (grid.width() as f64 - 0.5) * res, oy - 0.5 * res],
        [ox + (grid.width() as f64 - 0.5) * res, oy + (grid.height() as f64 - 0.5) * res],
        [ox - 0.5 * res, oy + (grid.height() as f64 - 0.5) * res],
        [ox - 0.5 * res, oy - 0.5 * res],
    ];
    let chart = LineChart {
        title: format!("Planned path, {} cells", path.cells().len()),
        x_label: "x (m)".into(),
        y_label: "y (m)".into(),
        series: vec![
            Series::new("A* path", path.cells().iter().map(|c| grid.world_of(*c)).collect()).dashed(),
            Series::new("B-spline", trajectory.poses().iter().map(|p| [p.x, p.y]).collect()),
            Series::new("map bounds", outline),
        ],
        boxes,
        equal_aspect: true,
    };
    write(out, "plan.svg", &chart.render())?;
    finish(cfg, out)?;
    println!(
        "planned {} cells, {} samples over {} s -> {}",
        path.cells().len(),
        trajectory.len(),
        cfg.total_time,
        out.display()
    );
    Ok(())
}

fn cmd_track(cfg: &ExperimentConfig, out: &Path, parallel: bool) -> Result<(), ExperimentError> {
    let runs = experiment::run_track(cfg, parallel)?;
    let trajectory = cfg.trajectory()?;
    let mut xy = vec![Series::new("reference", trajectory.poses().iter().map(|p| [p.x, p.y]).collect()).dashed()];
    let mut theta = vec![Series::new("reference", trajectory.poses().iter().enumerate().map(|(n, p)| [trajectory.time(n), p.theta]).collect()).dashed()];
    for run in &runs {
        match &run.outcome {
            Ok(log) => {
                write(out, &format!("run_{}.csv", run.controller), &log.to_csv())?;
                xy.push(Series::new(run.controller, log.records.iter().map(|r| [r.truth.x, r.truth.y]).collect()));
                theta.push(Series::new(run.controller, log.records.iter().map(|r| [r.t, r.truth.theta]).collect()));
            }
            Err(e) => eprintln!("warning: {} failed: {e}", run.controller),
        }
    }
    let metrics = experiment::metrics_csv(cfg, &runs);
    write(out, "metrics.csv", &metrics)?;
    let chart = LineChart {
        title: "Pose tracking".into(),
        x_label: "x (m)".into(),
        y_label: "y (m)".into(),
        series: xy,
        equal_aspect: true,
        ..Default::default()
    };
    write(out, "track_xy.svg", &chart.render())?;
    let chart = LineChart {
        title: "Heading tracking".into(),
        x_label: "t (s)".into(),
        y_label: "theta (rad)".into(),
        series: theta,
        ..Default::default()
    };
    write(out, "track_theta.svg", &chart.render())?;
    finish(cfg, out)?;
    print!("{metrics}");
    Ok(())
}

fn cmd_step(cfg: &ExperimentConfig, out: &Path, parallel: bool) -> Result<(), ExperimentError> {
    let runs = experiment::run_step(cfg, parallel)?;
    let table = experiment::step_csv(&runs);
    write(out, "step.csv", &table)?;
    for axis in StepAxis::ALL {
        let series = runs
            .iter()
            .filter_map(|run| {
                let r = run.responses.iter().find(|r| r.axis == axis)?;
                Some(Series::new(run.controller, r.series().into_iter().map(|(t, y)| [t, y]).collect()))
            })
            .collect();
        let chart = LineChart {
            title: format!("Unit step in {}", axis.as_str()),
            x_label: "t (s)".into(),
            y_label: axis.as_str().into(),
            series,
            ..Default::default()
        };
        write(out, &format!("step_{}.svg", axis.as_str()), &chart.render())?;
    }
    finish(cfg, out)?;
    print!("{table}");
    Ok(())
}

fn cmd_horizon(cfg: &ExperimentConfig, out: &Path, parallel: bool) -> Result<(), ExperimentError> {
    let rows = experiment::run_horizon(cfg, &cfg.horizons, parallel)?;
    let table = experiment::horizon_csv(&rows);
    write(out, "horizon.csv", &table)?;
    let chart = BarChart {
        title: "NMPC tracking error by prediction horizon".into(),
        x_label: "Np".into(),
        y_label: "error".into(),
        categories: rows.iter().map(|r| r.horizon.to_string()).collect(),
        groups: vec![
            ("me_xy (m)".into(), rows.iter().map(|r| r.metrics.me_xy).collect()),
            ("mae_theta (rad)".into(), rows.iter().map(|r| r.metrics.mae_theta).collect()),
        ],
    };
    write(out, "horizon.svg", &chart.render())?;
    finish(cfg, out)?;
    print!("{table}");
    Ok(())
}
