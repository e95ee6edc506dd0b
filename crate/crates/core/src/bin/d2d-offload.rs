use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use d2d_offload::closeness::{closeness, fit_gamma, ContactLaw};
use d2d_offload::config::{defaults_help, load_config, RunConfig};
use d2d_offload::engine::{build_social_layer, run_episode, EpisodeConfig};
use d2d_offload::offsn::{build_graph, parse_positions, partition};
use d2d_offload::plot::write_plots;
use d2d_offload::sweep::{replica_seed, run_sweep, write_csv, Axis, Metric, SweepSpec};
use d2d_offload::trace::{contact_stats, parse_trace};
use d2d_offload::{Error, Result};

#[derive(Parser)]
#[command(
    name = "d2d-offload",
    version,
    about = "Socially-aware D2D traffic offloading simulator"
)]
#[command(after_help = defaults_help())]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML config overlaid on the defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; replica r uses seed + r.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Number of replicas.
    #[arg(long)]
    replicas: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run episodes and write per-user and per-episode results.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Sweep one parameter and write sweep.csv plus SVG charts.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// alpha, d2d_max, cost_fraction or w_t.
        #[arg(long)]
        axis: Option<String>,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
    },
    /// Fit contact laws from an encounter trace and partition the graph.
    Fit {
        #[command(flatten)]
        common: Common,
        /// Encounter CSV: user_a,user_b,start_s,duration_s.
        #[arg(long)]
        trace: PathBuf,
        /// Positions CSV: user_id,x_m,y_m. Without it only contact laws are written.
        #[arg(long)]
        positions: Option<PathBuf>,
        /// Required contact time X_min in seconds.
        #[arg(long, default_value_t = 0.1)]
        x_min: f64,
    },
}

fn load(common: &Common) -> Result<RunConfig> {
    let mut run = match &common.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        run.episode.seed = seed;
    }
    if let Some(r) = common.replicas {
        run.replicas = r;
    }
    fs::create_dir_all(&common.out)?;
    Ok(run)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn cmd_run(common: &Common) -> Result<()> {
    let run = load(common)?;
    let replicas = common.replicas.unwrap_or(1).max(1);
    let mut users = create(&common.out, "per_user.csv")?;
    writeln!(
        users,
        "replica,user,offsn,m_n,m_n0,old_served_d2d,d2d_failures,old_served_enb,v_c,r_c,r_d,u_user,u_enb,offloaded"
    )?;
    let mut episodes = create(&common.out, "episodes.csv")?;
    writeln!(
        episodes,
        "replica,seed,offloaded_traffic,offloaded_traffic_total,enb_data_rate_sum,d2d_success_ratio,requests,d2d_attempts,d2d_served,n_offsns,white_area_users"
    )?;
    for r in 0..replicas {
        let config = EpisodeConfig {
            seed: replica_seed(run.episode.seed, r),
            ..run.episode.clone()
        };
        let m = run_episode(&config)?;
        for u in &m.per_user {
            let offsn = u.offsn.map_or(String::new(), |i| i.to_string());
            writeln!(
                users,
                "{r},{},{offsn},{},{},{},{},{},{},{},{},{},{},{}",
                u.user,
                u.m_n,
                u.m_n0,
                u.old_served_d2d,
                u.d2d_failures,
                u.old_served_enb,
                u.v_c,
                u.r_c,
                u.r_d,
                u.u_user,
                u.u_enb,
                u.offloaded
            )?;
        }
        let a = &m.aggregates;
        writeln!(
            episodes,
            "{r},{},{},{},{},{},{},{},{},{},{}",
            config.seed,
            a.offloaded_traffic,
            a.offloaded_traffic_total,
            a.enb_data_rate_sum,
            a.d2d_success_ratio,
            a.requests,
            a.d2d_attempts,
            a.d2d_served,
            a.n_offsns,
            a.white_area_users
        )?;
        if r == 0 {
            let social = build_social_layer(&config)?;
            social.graph.write_edges_csv(create(&common.out, "edges.csv")?)?;
            d2d_offload::offsn::write_positions(social.graph.positions(), create(&common.out, "positions.csv")?)?;
        }
    }
    users.flush()?;
    episodes.flush()?;
    println!("wrote {replicas} episode(s) to {}", common.out.display());
    Ok(())
}

fn cmd_sweep(common: &Common, axis: Option<&str>, values: Option<Vec<f64>>) -> Result<()> {
    let run = load(common)?;
    let axis: Axis = match axis {
        Some(a) => a.parse()?,
        None => run.sweep_axis.unwrap_or(Axis::Alpha),
    };
    let values = values
        .or(run.sweep_values.clone())
        .unwrap_or_else(|| default_values(axis));
    let spec = SweepSpec {
        axis,
        values,
        replicas: run.replicas,
        base: run.episode.clone(),
    };
    let rows = run_sweep(&spec, run.episode.seed)?;
    let mut out = create(&common.out, "sweep.csv")?;
    write_csv(&rows, &mut out)?;
    out.flush()?;
    let plots = write_plots(
        &rows,
        &[
            Metric::OffloadedTraffic,
            Metric::EnbDataRateSum,
            Metric::D2dSuccessRatio,
        ],
        &common.out,
    )?;
    println!(
        "wrote sweep.csv and {} chart(s) to {}",
        plots.len(),
        common.out.display()
    );
    Ok(())
}

fn default_values(axis: Axis) -> Vec<f64> {
    match axis {
        Axis::Alpha => vec![2.0, 4.0, 8.0, 12.0, 16.0],
        Axis::D2dMax => vec![20.0, 40.0, 60.0, 80.0],
        Axis::CostFraction => vec![0.05, 0.15, 0.30, 0.50],
        Axis::WT => vec![0.1, 0.3, 0.5, 0.7, 0.9],
    }
}

fn cmd_fit(common: &Common, trace: &Path, positions: Option<&Path>, x_min: f64) -> Result<()> {
    let run = load(common)?;
    let records = parse_trace(BufReader::new(File::open(trace)?))?;
    let stats = contact_stats(&records);
    let mut out = create(&common.out, "contact_laws.csv")?;
    writeln!(
        out,
        "user_a,user_b,n_encounters,mean_duration,irregularity,shape,scale,w"
    )?;
    for (pair, s) in &stats {
        let law = fit_gamma(s)?;
        let (shape, scale) = match law {
            ContactLaw::Gamma(g) => (g.shape().to_string(), g.scale().to_string()),
            ContactLaw::Degenerate(_) => ("inf".to_string(), "0".to_string()),
        };
        let w = closeness(&law, x_min)?.value();
        writeln!(
            out,
            "{},{},{},{},{},{shape},{scale},{w}",
            pair.lo(),
            pair.hi(),
            s.n_encounters,
            s.mean_duration,
            s.irregularity
        )?;
    }
    out.flush()?;
    if let Some(path) = positions {
        let positions = parse_positions(BufReader::new(File::open(path)?))?;
        let graph = build_graph(&stats, &positions, |_| x_min)?;
        graph.write_edges_csv(create(&common.out, "edges.csv")?)?;
        let parts = partition(&graph, run.episode.w_t);
        let mut out = create(&common.out, "partition.csv")?;
        writeln!(out, "user,offsn")?;
        for user in graph.users() {
            let offsn = parts.offsn_of(*user).map_or(String::from("white"), |i| i.to_string());
            writeln!(out, "{user},{offsn}")?;
        }
        out.flush()?;
        println!(
            "{} OffSN(s), {} white-area user(s) at w_t = {}",
            parts.offsns().len(),
            parts.white_area().len(),
            run.episode.w_t
        );
    }
    println!("fitted {} pair(s) into {}", stats.len(), common.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { common } => cmd_run(common),
        Command::Sweep { common, axis, values } => cmd_sweep(common, axis.as_deref(), values.clone()),
        Command::Fit {
            common,
            trace,
            positions,
            x_min,
        } => cmd_fit(common, trace, positions.as_deref(), *x_min),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::Config(_)) {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
