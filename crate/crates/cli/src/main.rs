use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use tqg_core::elliptic::{manufactured_convergence, SolverSettings};
use tqg_core::harness::{self, alpha_sweep, SimConfig};

/// Thermal quasi-geostrophic solver on the periodic unit square.
#[derive(Parser, Debug)]
#[command(name = "tqg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one simulation, writing diagnostics.csv and snapshots.
    Run(Overrides),
    /// Run an α-sweep and write sweep.csv with fitted slopes.
    Sweep(Overrides),
    /// Scan the linear dispersion relation and write dispersion.csv.
    Dispersion(Overrides),
    /// Manufactured-solution self-test of the elliptic solver.
    Check(Overrides),
}

#[derive(Args, Debug, Default)]
struct Overrides {
    /// TOML config file; every key can be overridden below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    snapshot_every: Option<usize>,
    #[arg(long)]
    elliptic_tol: Option<f64>,
    #[arg(long)]
    preset: Option<String>,
    /// Comma-separated α list (sweep members or dispersion curves).
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    /// Comma-separated checkpoint times for the sweep.
    #[arg(long, value_delimiter = ',')]
    checkpoints: Option<Vec<f64>>,
    /// Any other key as `dotted.key=value`, value in TOML syntax.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn set_key(root: &mut toml::Table, key: &str, raw: &str) -> Result<()> {
    // parse the value as TOML, falling back to a bare string
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).with_context(|| format!("empty key in `{key}`"))?;
    let mut table = root;
    for p in parts {
        table = table
            .entry(p)
            .or_insert_with(|| toml::Value::Table(Default::default()))
            .as_table_mut()
            .with_context(|| format!("`{p}` is not a table"))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

impl Overrides {
    /// Config file (or defaults), then named flags, then `--set` pairs.
    fn resolve(&self, list_target: ListTarget) -> Result<SimConfig> {
        let mut cfg = match &self.config {
            Some(path) => SimConfig::load(path).with_context(|| format!("reading {}", path.display()))?,
            None => SimConfig::default(),
        };
        macro_rules! take {
            ($($field:ident),*) => { $( if let Some(v) = &self.$field { cfg.$field = v.clone(); } )* };
        }
        take!(n, degree, alpha, dt, steps, out, snapshot_every, elliptic_tol, preset);
        if let Some(a) = &self.alphas {
            match list_target {
                ListTarget::Dispersion => cfg.dispersion.alphas = a.clone(),
                _ => cfg.sweep.alphas = a.clone(),
            }
        }
        if let Some(c) = &self.checkpoints {
            cfg.sweep.checkpoints = c.clone();
        }
        if !self.set.is_empty() {
            let mut table: toml::Table = toml::from_str(&cfg.to_toml()?)?;
            for pair in &self.set {
                let (k, v) = pair.split_once('=').with_context(|| format!("expected KEY=VALUE, got `{pair}`"))?;
                set_key(&mut table, k.trim(), v.trim())?;
            }
            cfg = SimConfig::from_toml(&toml::to_string(&table)?)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy)]
enum ListTarget {
    Sweep,
    Dispersion,
}

fn run(o: &Overrides) -> Result<()> {
    let cfg = o.resolve(ListTarget::Sweep)?;
    eprintln!("run: n={} k={} α={} Δt={} steps={} → {}", cfg.n, cfg.degree, cfg.alpha, cfg.dt, cfg.steps, cfg.out.display());
    let summary = harness::run(&cfg)?;
    let last = summary.records.last().expect("initial record is always written");
    println!("steps        {}", summary.steps);
    println!("final time   {}", last.time);
    println!("energy       {:e}", last.energy);
    println!("mass b       {:e}", last.mass_b);
    println!("mass omega   {:e}", last.mass_omega);
    let ints = summary.monitor.integrals();
    println!("BKM integrals {:e} {:e} {:e}", ints[0], ints[1], ints[2]);
    if summary.monitor.any_suspicion() {
        println!("warning: blow-up suspicion flagged {:?}", summary.monitor.suspicion());
    }
    println!("snapshots    {}", summary.snapshots.len());
    Ok(())
}

fn sweep(o: &Overrides) -> Result<()> {
    let cfg = o.resolve(ListTarget::Sweep)?;
    eprintln!("sweep: α ∈ {:?}, checkpoints {:?}", cfg.sweep.alphas, cfg.sweep.checkpoints);
    let report = alpha_sweep(&cfg, &cfg.sweep.alphas, &cfg.sweep.checkpoints)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    fs::create_dir_all(&cfg.out)?;
    let path = cfg.out.join("sweep.csv");
    let csv = report.to_csv();
    fs::write(&path, &csv)?;
    print!("{csv}");
    eprintln!("wrote {}", path.display());
    if !report.failures.is_empty() {
        bail!("{} sweep member(s) failed; partial results kept in {}", report.failures.len(), path.display());
    }
    Ok(())
}

fn dispersion(o: &Overrides) -> Result<()> {
    let cfg = o.resolve(ListTarget::Dispersion)?;
    let (curves, csv) = harness::dispersion(&cfg.dispersion)?;
    fs::create_dir_all(&cfg.out)?;
    let path = cfg.out.join("dispersion.csv");
    fs::write(&path, csv)?;
    for c in &curves {
        match c.k_max() {
            Some(k) => println!("alpha {:e}: |k|_max ≈ {k:.4}", c.alpha),
            None => println!("alpha {:e}: stable on the scanned range", c.alpha),
        }
    }
    eprintln!("wrote {}", path.display());
    Ok(())
}

/// Returns whether every study reached the expected order.
fn check(o: &Overrides) -> Result<bool> {
    let cfg = o.resolve(ListTarget::Sweep)?;
    if cfg.n < 8 || cfg.n % 4 != 0 {
        bail!("check needs --n divisible by 4 and at least 8, got {}", cfg.n);
    }
    let ns = [cfg.n / 4, cfg.n / 2, cfg.n];
    let settings = SolverSettings { tolerance: cfg.elliptic_tol.min(1e-12), ..Default::default() };
    let alphas = if cfg.alpha > 0.0 { vec![0.0, cfg.alpha] } else { vec![0.0, 1.0 / 4096.0] };
    let mut ok = true;
    println!("degree,alpha,n,l2_error,rate");
    for alpha in alphas {
        let study = manufactured_convergence(cfg.degree, alpha, &ns, settings)?;
        let rates = study.rates();
        for (i, (n, e)) in study.ns.iter().zip(&study.errors).enumerate() {
            let rate = if i == 0 { String::new() } else { format!("{:.3}", rates[i - 1]) };
            println!("{},{alpha:e},{n},{e:e},{rate}", cfg.degree);
        }
        let min = study.min_rate().unwrap_or(f64::NAN);
        let pass = min >= cfg.degree as f64 + 0.9;
        ok &= pass;
        eprintln!("alpha {alpha:e}: min rate {min:.3} (need ≥ {}) {}", cfg.degree as f64 + 0.9, if pass { "PASS" } else { "FAIL" });
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(o) => run(o).map(|_| true),
        Command::Sweep(o) => sweep(o).map(|_| true),
        Command::Dispersion(o) => dispersion(o).map(|_| true),
        Command::Check(o) => check(o),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_parses_toml_values_and_nested_keys() {
        let o = Overrides {
            set: vec!["diagnostics_every=5".into(), "dispersion.k_max=4.5".into(), "dispersion.params.U=2.0".into()],
            ..Default::default()
        };
        let cfg = o.resolve(ListTarget::Sweep).unwrap();
        assert_eq!(cfg.diagnostics_every, 5);
        assert_eq!(cfg.dispersion.k_max, 4.5);
        assert_eq!(cfg.dispersion.params.u, 2.0);
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        fs::write(&path, "n = 12\ndt = 0.01\npreset = \"flat-bathymetry\"\n").unwrap();
        let o = Overrides { config: Some(path), dt: Some(0.005), alphas: Some(vec![0.0, 0.5]), ..Default::default() };
        let cfg = o.resolve(ListTarget::Sweep).unwrap();
        assert_eq!((cfg.n, cfg.dt, cfg.preset.as_str()), (12, 0.005, "flat-bathymetry"));
        assert_eq!(cfg.sweep.alphas, vec![0.0, 0.5]);
        let cfg = o.resolve(ListTarget::Dispersion).unwrap();
        assert_eq!(cfg.dispersion.alphas, vec![0.0, 0.5]);
    }

    #[test]
    fn bad_overrides_are_rejected() {
        let unknown = Overrides { set: vec!["bogus=1".into()], ..Default::default() };
        assert!(unknown.resolve(ListTarget::Sweep).is_err());
        let no_eq = Overrides { set: vec!["n".into()], ..Default::default() };
        assert!(no_eq.resolve(ListTarget::Sweep).is_err());
        let invalid = Overrides { n: Some(0), ..Default::default() };
        assert!(invalid.resolve(ListTarget::Sweep).is_err());
    }
}
