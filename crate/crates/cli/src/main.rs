use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use intentnav::bench::{
    benchmark_suite, derive_seed, format_table, run_task, training_suite, write_trace, Method, RunConfig, RunMetrics,
    TaskSpec,
};
use intentnav::dataset::{collect, read_pool, write_pool};
use intentnav::neuralnet::{checkpoint, train, IntentionNet, NetKind};
use intentnav::world::{load_map, OccupancyGrid};

#[derive(Parser)]
#[command(
    name = "intentnav",
    version,
    about = "Intention-conditioned indoor navigation benchmark"
)]
struct Cli {
    /// Seed for every random stream of the command.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Flat `key = value` run configuration (defaults otherwise).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Extra `key=value` overrides applied after the config file.
    #[arg(long = "set", global = true)]
    set: Vec<String>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the effective run configuration.
    Config,
    /// Write benchmark and training maps with their task and scene files.
    Genmaps {
        #[arg(long, default_value = "maps")]
        out: PathBuf,
        /// Map variants per training family (family A gets twice as many).
        #[arg(long, default_value_t = 6)]
        variants: u64,
        /// Random-walk demonstration tasks per training map.
        #[arg(long, default_value_t = 3)]
        walks: usize,
    },
    /// Drive the expert over every task in a directory and write the dataset.
    Collect {
        #[arg(long, default_value = "maps/train")]
        tasks: PathBuf,
        #[arg(long, default_value = "dataset.bin")]
        out: PathBuf,
    },
    /// Train one net on a dataset and write its checkpoint and loss history.
    Train {
        #[arg(long, value_parser = parse_kind)]
        net: NetKind,
        #[arg(long, default_value = "dataset.bin")]
        data: PathBuf,
        /// Checkpoint path; defaults to `<net>.ck`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one method on one task; writes metrics JSON, trace CSV and PNG.
    Eval {
        #[arg(long, value_parser = parse_method)]
        method: Method,
        /// Task file, or a task id looked up in `--tasks-dir`.
        #[arg(long)]
        task: String,
        #[arg(long, default_value = "maps/bench")]
        tasks_dir: PathBuf,
        /// Checkpoint for learned methods; defaults to `<net>.ck`.
        #[arg(long)]
        net: Option<PathBuf>,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// Aggregate the metrics JSON files of a run directory into a table.
    Report {
        #[arg(long, default_value = "runs")]
        runs: PathBuf,
    },
}

fn parse_kind(s: &str) -> Result<NetKind, String> {
    s.parse().map_err(|e: intentnav::neuralnet::NetError| e.to_string())
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: intentnav::bench::BenchError| e.to_string())
}

fn run_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(p) = &cli.config {
        let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        cfg.apply_text(&text)?;
    }
    for kv in &cli.set {
        let Some((k, v)) = kv.split_once('=') else {
            bail!("--set expects key=value, got `{kv}`");
        };
        cfg.set(k.trim(), v.trim())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_task(dir: &Path, task: &str) -> Result<(TaskSpec, OccupancyGrid)> {
    let path = if Path::new(task).is_file() {
        PathBuf::from(task)
    } else {
        dir.join(format!("{task}.task"))
    };
    let spec = TaskSpec::load(&path)?;
    let map = path
        .parent()
        .unwrap_or(Path::new("."))
        .join(format!("{}.pgm", spec.map_id));
    let grid = load_map(&map).with_context(|| format!("loading map {}", map.display()))?;
    Ok((spec, grid))
}

fn task_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "task"))
        .collect();
    v.sort();
    Ok(v)
}

fn genmaps(out: &Path, variants: u64, walks: usize, seed: u64) -> Result<()> {
    let bench = out.join("bench");
    let train_dir = out.join("train");
    fs::create_dir_all(&bench)?;
    fs::create_dir_all(&train_dir)?;
    for (map, task) in benchmark_suite(seed) {
        map.grid.save(&bench.join(format!("{}.pgm", map.id)))?;
        task.save(&bench.join(format!("{}.task", task.id)))?;
        println!("bench {} {} ({} goals)", map.id, task.id, task.goals.len());
    }
    for (map, tasks) in training_suite(variants, walks, derive_seed(seed, "walks")) {
        map.grid.save(&train_dir.join(format!("{}.pgm", map.id)))?;
        for t in &tasks {
            t.save(&train_dir.join(format!("{}.task", t.id)))?;
        }
        println!("train {} ({} tasks)", map.id, tasks.len());
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let cfg = run_config(&cli)?;
    let seed = cli.seed;
    match &cli.cmd {
        Cmd::Config => print!("{}", cfg.to_text()),
        Cmd::Genmaps { out, variants, walks } => genmaps(out, *variants, *walks, seed)?,
        Cmd::Collect { tasks, out } => {
            let mut loaded = Vec::new();
            for p in task_files(tasks)? {
                loaded.push(load_task(tasks, p.to_str().unwrap())?);
            }
            if loaded.is_empty() {
                bail!("no .task files in {}", tasks.display());
            }
            let runs: Vec<(&OccupancyGrid, &TaskSpec)> = loaded.iter().map(|(t, g)| (g, t)).collect();
            let (pool, report) = collect(&runs, &cfg, seed)?;
            write_pool(&pool, out)?;
            println!(
                "{} samples from {} episodes ({} train / {} eval), discarded {:?}",
                pool.len(),
                report.episodes,
                pool.train_indices().len(),
                pool.eval_indices().len(),
                report.discarded
            );
        }
        Cmd::Train { net, data, out } => {
            let pool = read_pool(data)?;
            let mut ncfg = cfg.net.clone();
            ncfg.seed = derive_seed(seed, &format!("init/{}", net.name()));
            let mut model = IntentionNet::<f32>::new(*net, &ncfg)?;
            let mut tcfg = cfg.train.clone();
            tcfg.seed = derive_seed(seed, &format!("train/{}", net.name()));
            let report = train(&mut model, &pool, &tcfg, |e| {
                println!(
                    "epoch {} train {:.5} eval {:.5} lr {:e}",
                    e.epoch, e.train_mse, e.eval_mse, e.lr
                )
            })?;
            let out = out
                .clone()
                .unwrap_or_else(|| PathBuf::from(format!("{}.ck", net.name())));
            checkpoint::save(&mut model, &out)?;
            fs::write(out.with_extension("csv"), report.to_csv())?;
            println!("wrote {}", out.display());
        }
        Cmd::Eval {
            method,
            task,
            tasks_dir,
            net,
            out,
        } => {
            let (spec, grid) = load_task(tasks_dir, task)?;
            let model = match method.net_kind() {
                Some(kind) => {
                    let p = net
                        .clone()
                        .unwrap_or_else(|| PathBuf::from(format!("{}.ck", kind.name())));
                    let m = checkpoint::load(&p).with_context(|| format!("loading checkpoint {}", p.display()))?;
                    if m.kind != kind {
                        bail!(
                            "{} is a {} checkpoint, {} needs {}",
                            p.display(),
                            m.kind.name(),
                            method,
                            kind.name()
                        );
                    }
                    Some(m)
                }
                None => None,
            };
            let r = run_task(&grid, &spec, *method, model.as_ref(), &cfg, seed)?;
            let stem = format!("{}_{}_s{}", spec.id, method.name(), seed);
            write_trace(out, &stem, &grid, &spec, &r.trace, &r.metrics)?;
            println!("{}", serde_json::to_string_pretty(&r.metrics)?);
        }
        Cmd::Report { runs } => {
            let mut all: Vec<RunMetrics> = Vec::new();
            let mut files: Vec<PathBuf> = fs::read_dir(runs)
                .with_context(|| format!("listing {}", runs.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect();
            files.sort();
            for f in files {
                let text = fs::read_to_string(&f)?;
                all.push(serde_json::from_str(&text).with_context(|| format!("parsing {}", f.display()))?);
            }
            if all.is_empty() {
                bail!("no run metrics in {}", runs.display());
            }
            let table = format_table(&all);
            fs::write(runs.join("report.txt"), &table)?;
            print!("{table}");
        }
    }
    Ok(())
}
