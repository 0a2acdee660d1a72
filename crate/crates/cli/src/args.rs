use clap::{Args, Parser, Subcommand, ValueEnum};
use riemcover::differentiation::RadiusLadder;
use riemcover::{ModelSpace, Result, Tolerances};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(
    name = "riemcover",
    version,
    about = "Geodesic ball coverings and ball-ratio measure differentiation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Greedy selection of a ball family, with the selection audit.
    Cover,
    /// Full inequality audit of a selection (or of the greedy selection of a family).
    Audit,
    /// First-fit coloring into disjoint subfamilies, with verification.
    Color,
    /// Ball-ratio derivative estimates at a list of points.
    Differentiate,
    /// Disjoint-ball fill of an atomic measure inside a region.
    Vitali,
    /// Integral identity check for the estimated derivative.
    Rncheck,
    /// Random fixture for one space, run through every pipeline.
    Demo,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SpaceKind {
    Euclidean,
    Sphere,
    Hyperbolic,
    Torus,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Model space (used when the input file has no "space" entry, and by demo).
    #[arg(long, global = true, value_enum)]
    pub space: Option<SpaceKind>,
    /// Intrinsic dimension for euclidean, sphere and hyperbolic.
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    /// Torus periods, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub periods: Option<Vec<f64>>,
    /// Input JSON file.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Seed for every Monte Carlo path and for demo fixtures.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Largest ladder radius.
    #[arg(long, global = true)]
    pub ladder_r0: Option<f64>,
    /// Ratio between consecutive ladder radii, in (0, 1).
    #[arg(long, global = true)]
    pub ladder_factor: Option<f64>,
    /// Number of ladder radii (at least 3).
    #[arg(long, global = true)]
    pub ladder_depth: Option<usize>,
    /// Relative convergence window of ratio ladders.
    #[arg(long, global = true)]
    pub rel_tol: Option<f64>,
    /// Slack for inequalities between rational quantities.
    #[arg(long, global = true)]
    pub exact_slack: Option<f64>,
    /// Slack for inequalities involving transcendental functions.
    #[arg(long, global = true)]
    pub trans_slack: Option<f64>,
    /// Ratio above which a rising ladder is divergent.
    #[arg(long, global = true)]
    pub divergence_ceiling: Option<f64>,
    /// Relative spread that marks an oscillating ladder.
    #[arg(long, global = true)]
    pub gap_tol: Option<f64>,
    /// Worker threads, also the number of Monte Carlo streams.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Overwrite existing output files.
    #[arg(long, global = true)]
    pub force: bool,
}

impl Common {
    pub fn space_from_flags(&self) -> Result<Option<ModelSpace>> {
        let Some(kind) = self.space else {
            return Ok(None);
        };
        let dim = self.dim.unwrap_or(2);
        Ok(Some(match kind {
            SpaceKind::Euclidean => ModelSpace::euclidean(dim)?,
            SpaceKind::Sphere => ModelSpace::sphere(dim)?,
            SpaceKind::Hyperbolic => ModelSpace::hyperbolic(dim)?,
            SpaceKind::Torus => {
                let periods = self.periods.clone().unwrap_or_else(|| vec![1.0; dim]);
                ModelSpace::flat_torus(periods)?
            }
        }))
    }

    pub fn tolerances(&self) -> Tolerances {
        let d = Tolerances::default();
        Tolerances {
            exact_slack: self.exact_slack.unwrap_or(d.exact_slack),
            transcendental_slack: self.trans_slack.unwrap_or(d.transcendental_slack),
            rel_tol: self.rel_tol.unwrap_or(d.rel_tol),
            divergence_ceiling: self.divergence_ceiling.unwrap_or(d.divergence_ceiling),
            gap_tol: self.gap_tol.unwrap_or(d.gap_tol),
        }
    }

    /// Flags override `base`, which defaults to the space's default ladder.
    pub fn ladder(&self, space: &ModelSpace, base: Option<RadiusLadder>) -> Result<RadiusLadder> {
        let d = base.unwrap_or_else(|| RadiusLadder::default_for(space));
        RadiusLadder::new(
            self.ladder_r0.unwrap_or(d.r0),
            self.ladder_factor.unwrap_or(d.factor),
            self.ladder_depth.unwrap_or(d.depth),
        )
    }
}
