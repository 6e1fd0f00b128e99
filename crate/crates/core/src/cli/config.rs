//! Flag and config-file merging, then validation into a typed run configuration.

use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use crate::correlator::{Order, PhaseAverage};
use crate::error::{Error, Result};
use crate::pattern::{DetectionScheme, SlitGeometry};
use crate::states::{DistributionKind, StateSpec};

/// Every tunable; the same shape is accepted from flags and from `--config` JSON.
#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    /// State name: coherent, dif, cha, cohN, difN, chaN, entN (noon), numN.
    #[arg(long)]
    pub state: Option<String>,
    /// Mean photon number per mode; `states` accepts a comma list.
    #[arg(long = "mean-n", value_delimiter = ',', allow_hyphen_values = true)]
    pub mean_n: Option<Vec<f64>>,
    /// Total photon number for substate, NOON and number states.
    #[arg(long)]
    pub n: Option<usize>,
    /// Explicit state phases (comma list).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub phases: Option<Vec<f64>>,
    /// Distribution family for `states`: poisson, bose or both.
    #[arg(long)]
    pub kind: Option<String>,
    /// Correlation order, 1 or 2.
    #[arg(long)]
    pub order: Option<u8>,
    /// Detector scheme: same, opposite or general.
    #[arg(long)]
    pub scheme: Option<String>,
    /// Fixed second-detector position for the general scheme, in metres.
    #[arg(long, allow_hyphen_values = true)]
    pub rho2: Option<f64>,
    /// Slit separation over slit width, ℓ/a (default 4).
    #[arg(long)]
    pub ratio: Option<f64>,
    /// Full geometry k,l,a,z0 in SI units.
    #[arg(long, value_delimiter = ',')]
    pub geometry: Option<Vec<f64>>,
    /// Scan grid lo,hi,points in units of u = kℓρ/2z₀.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub grid: Option<Vec<f64>>,
    /// Phase averaging: quad:K, mc:M, pairing or none.
    #[arg(long)]
    pub avg: Option<String>,
    /// Seed for every random stream (default 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Pattern route: catalog, engine or both.
    #[arg(long)]
    pub route: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Detection events for `simulate`.
    #[arg(long)]
    pub events: Option<u64>,
    /// Histogram bins for `simulate`.
    #[arg(long)]
    pub bins: Option<usize>,
    /// Run a single `verify` check.
    #[arg(long)]
    pub only: Option<String>,
    /// Deliberate assembly fault for `verify` (swap-BC).
    #[arg(long = "inject-bug")]
    pub inject_bug: Option<String>,
    /// Also write a gnuplot script next to each CSV.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub plot: Option<bool>,
}

macro_rules! overlay {
    ($flags:expr, $file:expr, $($f:ident),*) => {
        Settings { $($f: $flags.$f.or($file.$f)),* }
    };
}

impl Settings {
    /// Flags win over file values.
    pub fn merged_over(self, file: Settings) -> Settings {
        overlay!(
            self, file, state, mean_n, n, phases, kind, order, scheme, rho2, ratio, geometry, grid, avg, seed, route,
            out, events, bins, only, inject_bug, plot
        )
    }

    pub fn from_json(text: &str) -> Result<Settings> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("config file: {e}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteChoice {
    Catalog,
    Engine,
    Both,
}

/// Validated configuration; built before any computation starts.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: String,
    /// Merged settings as given, echoed into every sidecar.
    pub settings: Settings,
    pub spec: StateSpec,
    pub mean_n_list: Vec<f64>,
    pub families: Vec<DistributionKind>,
    pub order: Order,
    pub scheme: DetectionScheme,
    pub geometry: SlitGeometry,
    /// `(lo, hi, points)` in units of `u`.
    pub grid_u: (f64, f64, usize),
    pub grid: Vec<f64>,
    pub averaging: Option<PhaseAverage>,
    pub seed: u64,
    pub route: RouteChoice,
    pub out: PathBuf,
    pub events: u64,
    pub bins: usize,
    pub only: Option<String>,
    pub inject_bug: Option<String>,
    pub plot: bool,
}

fn parse_avg(text: &str, seed: u64) -> Result<PhaseAverage> {
    let t = text.trim().to_ascii_lowercase();
    let count = |s: &str| {
        s.parse::<usize>().map_err(|_| Error::InvalidAveraging(format!("'{text}' needs a positive integer count")))
    };
    match t.split_once(':') {
        Some(("quad", k)) => Ok(PhaseAverage::PeriodicQuadrature { nodes: count(k)? }),
        Some(("mc", m)) => Ok(PhaseAverage::MonteCarlo { samples: count(m)?, seed }),
        None if t == "pairing" => Ok(PhaseAverage::Pairing),
        None if t == "none" => Ok(PhaseAverage::None),
        _ => Err(Error::InvalidAveraging(format!("'{text}' is not quad:K, mc:M, pairing or none"))),
    }
}

impl RunConfig {
    pub fn resolve(command: &str, settings: Settings) -> Result<RunConfig> {
        let s = &settings;
        let mean_n_list = match &s.mean_n {
            Some(v) if v.is_empty() => return Err(Error::InvalidInput("--mean-n needs a value".into())),
            Some(v) => v.clone(),
            None if command == "states" => vec![1.0, 2.0, 4.0, 9.0],
            None => vec![1.0],
        };
        if let Some(bad) = mean_n_list.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
            return Err(Error::InvalidInput(format!("mean-n {bad} must be finite and ≥ 0")));
        }
        let families = match s.kind.as_deref().unwrap_or("both") {
            "both" | "all" => vec![DistributionKind::Poisson, DistributionKind::BoseEinstein],
            k => vec![DistributionKind::parse(k)?],
        };
        let mut spec = StateSpec::parse(s.state.as_deref().unwrap_or("coherent"), mean_n_list[0], s.n)?;
        if let Some(p) = &s.phases {
            spec = spec.with_phases(p.clone());
        }
        spec.validate()?;
        let order = Order::from_value(s.order.unwrap_or(1) as usize)?;
        let scheme = DetectionScheme::parse(s.scheme.as_deref().unwrap_or("opposite"), s.rho2.unwrap_or(0.0))?;
        let geometry = match (&s.geometry, s.ratio) {
            (Some(_), Some(_)) => return Err(Error::InvalidGeometry("give either --geometry or --ratio".into())),
            (Some(g), None) if g.len() == 4 => SlitGeometry::new(g[0], g[1], g[2], g[3])?,
            (Some(g), None) => {
                return Err(Error::InvalidGeometry(format!("--geometry needs k,l,a,z0, got {} values", g.len())))
            }
            (None, r) => SlitGeometry::with_ratio(r.unwrap_or(4.0))?,
        };
        let tau = std::f64::consts::TAU;
        let grid_u = match &s.grid {
            None => (-tau, tau, 1001),
            Some(g) if g.len() == 3 && g[2] >= 1.0 && g[2].fract() == 0.0 && g[0].is_finite() && g[1] > g[0] => {
                (g[0], g[1], g[2] as usize)
            }
            Some(g) => return Err(Error::InvalidInput(format!("--grid needs lo,hi,points with hi > lo, got {g:?}"))),
        };
        let grid = geometry.grid_in_u(grid_u.0, grid_u.1, grid_u.2);
        let seed = s.seed.unwrap_or(0);
        let averaging = s.avg.as_deref().map(|a| parse_avg(a, seed)).transpose()?;
        let route = match s.route.as_deref().unwrap_or("catalog") {
            "catalog" => RouteChoice::Catalog,
            "engine" => RouteChoice::Engine,
            "both" => RouteChoice::Both,
            other => return Err(Error::InvalidInput(format!("unknown route '{other}'"))),
        };
        if let Some(b) = &s.inject_bug {
            if b != "swap-BC" {
                return Err(Error::InvalidInput(format!("unknown injected bug '{b}'; only swap-BC exists")));
            }
        }
        let events = s.events.unwrap_or(1_000_000);
        let bins = s.bins.unwrap_or(50);
        if events == 0 || bins == 0 {
            return Err(Error::InvalidInput("--events and --bins must be at least 1".into()));
        }
        Ok(RunConfig {
            command: command.to_string(),
            spec,
            mean_n_list,
            families,
            order,
            scheme,
            geometry,
            grid_u,
            grid,
            averaging,
            seed,
            route,
            out: s.out.clone().unwrap_or_else(|| PathBuf::from(".")),
            events,
            bins,
            only: s.only.clone(),
            inject_bug: s.inject_bug.clone(),
            plot: s.plot.unwrap_or(false),
            settings,
        })
    }

    /// Averaging for the engine route: the explicit choice or the exact default.
    pub fn averaging_for(&self, spec: &StateSpec) -> Result<PhaseAverage> {
        match &self.averaging {
            Some(a) => Ok(a.clone()),
            None => PhaseAverage::default_for(spec),
        }
    }
}
