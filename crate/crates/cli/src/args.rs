use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use hydrec::numerics::{SpatialGrid, TimeNodes};
use hydrec::potentials::PotentialModel;
use hydrec::reconstruction::{Anchor, Smoothing};
use hydrec::simulator::{CatStateParams, InitialState};

#[derive(Debug, Parser)]
#[command(name = "hydrec", version, about = "Density-matrix reconstruction from time-resolved position densities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Propagate a wave packet and record |ψ|² at the time nodes.
    Simulate(SimulateArgs),
    /// Run the moment recursion on a dataset.
    Reconstruct(ReconstructArgs),
    /// Sum the Taylor polynomial of a moment set, optionally against a reference.
    Assemble(AssembleArgs),
    /// Compare two stored density-matrix grids.
    Compare(CompareArgs),
    /// Cat-state Taylor polynomials of several orders against the exact density matrix.
    DemoCat(DemoCatArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ConstantsArgs {
    #[arg(long, default_value_t = 1.0)]
    pub hbar: f64,
    #[arg(long, default_value_t = 1.0)]
    pub mass: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// cat[:sigma,k0] | gaussian:sigma,x0,k0 | coherent:omega,x0,p0
    #[arg(long, default_value = "cat", value_parser = parse_state, allow_hyphen_values = true)]
    pub state: InitialState,
    /// free | harmonic:omega | quartic:c2,c4 | paul_trap:a,b,omega | polynomial:c0,c1,… (each c_k as a0/a1/… in t)
    #[arg(long, default_value = "free", value_parser = parse_potential, allow_hyphen_values = true)]
    pub potential: PotentialModel,
    /// x_min,x_max,n_points
    #[arg(long, default_value = "-10,10,1024", value_parser = parse_grid, allow_hyphen_values = true)]
    pub grid: SpatialGrid,
    /// t0,dt,m (m + 1 nodes)
    #[arg(long, default_value = "0,0.005,4", value_parser = parse_times, allow_hyphen_values = true)]
    pub times: TimeNodes,
    #[command(flatten)]
    pub constants: ConstantsArgs,
    /// Propagation steps per node interval.
    #[arg(long, default_value_t = 10)]
    pub substeps: usize,
    /// Standard deviation of additive Gaussian noise on f0 (clipped at 0).
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also store the exact wave functions for oracle comparisons.
    #[arg(long)]
    pub store_psi: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ReconstructArgs {
    /// Dataset manifest.
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub order: usize,
    /// window,degree
    #[arg(long, value_parser = parse_smooth)]
    pub smooth: Option<Smoothing>,
    /// Output node; defaults to the central node floor(m/2).
    #[arg(long)]
    pub node: Option<usize>,
    /// lower | median | split:x
    #[arg(long, default_value = "median", value_parser = parse_anchor, allow_hyphen_values = true)]
    pub anchor: Anchor,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Reference {
    AnalyticCat(CatStateParams),
    StoredPsi,
}

#[derive(Debug, Clone, Args)]
pub struct AssembleArgs {
    /// Moment-set manifest.
    #[arg(long)]
    pub moments: PathBuf,
    #[arg(long, default_value_t = 1.5)]
    pub y_max: f64,
    /// Odd number of off-diagonal samples.
    #[arg(long, default_value_t = 201)]
    pub y_points: usize,
    /// analytic-cat[:sigma,k0] | stored-psi
    #[arg(long, value_parser = parse_reference)]
    pub reference: Option<Reference>,
    /// Half-width in x of the comparison region.
    #[arg(long, default_value_t = 3.0)]
    pub x_max: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long, default_value_t = 3.0)]
    pub x_max: f64,
    #[arg(long, default_value_t = 1.5)]
    pub y_max: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct DemoCatArgs {
    #[arg(long, default_value = "10,20,36", value_delimiter = ',')]
    pub orders: Vec<usize>,
    #[arg(long, default_value_t = std::f64::consts::FRAC_1_SQRT_2)]
    pub sigma: f64,
    #[arg(long, default_value_t = 2.0 * std::f64::consts::SQRT_2)]
    pub k0: f64,
    #[arg(long, default_value_t = 1.0)]
    pub hbar: f64,
    #[arg(long, default_value = "-3,3,121", value_parser = parse_grid, allow_hyphen_values = true)]
    pub grid: SpatialGrid,
    #[arg(long, default_value_t = 1.5)]
    pub y_max: f64,
    #[arg(long, default_value_t = 201)]
    pub y_points: usize,
    #[arg(long)]
    pub out: PathBuf,
}

fn numbers(s: &str) -> Result<Vec<f64>, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect()
}

fn exactly<const N: usize>(s: &str, what: &str) -> Result<[f64; N], String> {
    let v = numbers(s)?;
    v.try_into().map_err(|v: Vec<f64>| format!("{what} needs {N} comma-separated values, got {}", v.len()))
}

fn as_count(v: f64, what: &str) -> Result<usize, String> {
    if v >= 0.0 && v.fract() == 0.0 && v < 1e9 {
        Ok(v as usize)
    } else {
        Err(format!("{what} must be a non-negative integer, got {v}"))
    }
}

pub fn parse_grid(s: &str) -> Result<SpatialGrid, String> {
    let [a, b, n] = exactly::<3>(s, "grid")?;
    SpatialGrid::new(a, b, as_count(n, "n_points")?).map_err(|e| e.to_string())
}

/// `t0,dt,m`, giving `m + 1` nodes.
pub fn parse_times(s: &str) -> Result<TimeNodes, String> {
    let [t0, dt, m] = exactly::<3>(s, "times")?;
    TimeNodes::new(t0, dt, as_count(m, "m")? + 1).map_err(|e| e.to_string())
}

fn split_kind(s: &str) -> (&str, &str) {
    match s.split_once(':') {
        Some((k, p)) => (k.trim(), p),
        None => (s.trim(), ""),
    }
}

pub fn parse_potential(s: &str) -> Result<PotentialModel, String> {
    let (kind, params) = split_kind(s);
    let model = match kind.replace('-', "_").as_str() {
        "free" => PotentialModel::Free,
        "harmonic" => {
            let [omega] = exactly::<1>(params, "harmonic")?;
            PotentialModel::Harmonic { omega }
        }
        "quartic" => {
            let [c2, c4] = exactly::<2>(params, "quartic")?;
            PotentialModel::Quartic { c2, c4 }
        }
        "paul_trap" => {
            let [a, b, omega] = exactly::<3>(params, "paul_trap")?;
            PotentialModel::PaulTrap { a, b, omega }
        }
        "polynomial" => PotentialModel::Polynomial {
            coefficients: params
                .split(',')
                .map(|c| {
                    c.split('/')
                        .filter(|t| !t.trim().is_empty())
                        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
                        .collect()
                })
                .collect::<Result<_, _>>()?,
        },
        other => return Err(format!("unknown potential kind {other:?}")),
    };
    if !model.is_valid() {
        return Err(format!("potential parameters must be finite: {s}"));
    }
    Ok(model)
}

pub fn parse_state(s: &str) -> Result<InitialState, String> {
    let (kind, params) = split_kind(s);
    match kind {
        "cat" if params.is_empty() => {
            let p = CatStateParams::default();
            Ok(InitialState::Cat { sigma: p.sigma, k0: p.k0 })
        }
        "cat" => {
            let [sigma, k0] = exactly::<2>(params, "cat")?;
            Ok(InitialState::Cat { sigma, k0 })
        }
        "gaussian" => {
            let [sigma, x0, k0] = exactly::<3>(params, "gaussian")?;
            Ok(InitialState::Gaussian { sigma, x0, k0 })
        }
        "coherent" => {
            let [omega, x0, p0] = exactly::<3>(params, "coherent")?;
            Ok(InitialState::Coherent { omega, x0, p0 })
        }
        other => Err(format!("unknown state {other:?}")),
    }
}

pub fn parse_smooth(s: &str) -> Result<Smoothing, String> {
    let [w, d] = exactly::<2>(s, "smooth")?;
    Ok(Smoothing { window: as_count(w, "window")?, degree: as_count(d, "degree")? })
}

pub fn parse_anchor(s: &str) -> Result<Anchor, String> {
    let (kind, params) = split_kind(s);
    match kind {
        "lower" => Ok(Anchor::Lower),
        "median" => Ok(Anchor::Median),
        "split" => {
            let [x] = exactly::<1>(params, "split")?;
            Ok(Anchor::Split(x))
        }
        other => Err(format!("unknown anchor {other:?}")),
    }
}

pub fn parse_reference(s: &str) -> Result<Reference, String> {
    let (kind, params) = split_kind(s);
    match kind {
        "analytic-cat" if params.is_empty() => Ok(Reference::AnalyticCat(CatStateParams::default())),
        "analytic-cat" => {
            let [sigma, k0] = exactly::<2>(params, "analytic-cat")?;
            Ok(Reference::AnalyticCat(CatStateParams::new(sigma, k0).map_err(|e| e.to_string())?))
        }
        "stored-psi" => Ok(Reference::StoredPsi),
        other => Err(format!("unknown reference {other:?}")),
    }
}
