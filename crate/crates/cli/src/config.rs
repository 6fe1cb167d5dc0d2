use std::path::PathBuf;

use clap::{Args, ValueEnum};
use entdist::protocol::Strategy;
use entdist::random::{random_spectrum, seeded_rng};
use entdist::sdp::SolverOptions;
use entdist::states::{load_basis_file, weyl_basis, MaxEntBasis, ResourceSpectrum};

use crate::commands::CliError;

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Local dimension d.
    #[arg(long, value_name = "D")]
    pub dim: Option<usize>,
    /// Resource spectrum: comma-separated squared weights a_i², or one of
    /// uniform, product, random.
    #[arg(long, value_name = "SPEC", allow_hyphen_values = true)]
    pub spectrum: Option<String>,
    /// Read --spectrum as Schmidt coefficients a_i instead of a_i².
    #[arg(long)]
    pub amplitudes: bool,
    /// Sort and rescale the spectrum instead of rejecting it.
    #[arg(long)]
    pub normalize: bool,
    /// Use only the first N basis states.
    #[arg(long, value_name = "N")]
    pub n_states: Option<usize>,
    /// JSON basis file; defaults to the Weyl basis.
    #[arg(long, value_name = "PATH")]
    pub basis_file: Option<PathBuf>,
    /// Relative tolerance for positivity checks.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// SDP stopping accuracy.
    #[arg(long, default_value_t = 1e-4)]
    pub accuracy: f64,
    /// SDP iteration cap.
    #[arg(long, default_value_t = 50_000)]
    pub max_iters: usize,
    /// ADMM penalty parameter.
    #[arg(long)]
    pub step: Option<f64>,
    /// Seed for random spectra, bases and sampling.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the report here instead of standard output.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Emit CSV tables instead of JSON.
    #[arg(long)]
    pub csv: bool,
    /// Measurement used for incomplete bases.
    #[arg(long, value_enum, default_value_t = StrategyArg::Completion)]
    pub strategy: StrategyArg,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyArg {
    Completion,
    Projector,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Completion => Strategy::Completion,
            StrategyArg::Projector => Strategy::Projector,
        }
    }
}

/// Command-line arguments resolved into library inputs.
pub struct RunConfig {
    pub basis: MaxEntBasis,
    pub basis_source: String,
    pub spectrum: Option<ResourceSpectrum>,
    pub n_states: usize,
    pub solver: SolverOptions,
    pub strategy: Strategy,
    pub tol: f64,
    pub seed: u64,
}

impl RunConfig {
    pub fn resolve(args: &CommonArgs) -> Result<Self, CliError> {
        let (basis, basis_source) = match &args.basis_file {
            Some(path) => {
                let b = load_basis_file(path)
                    .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
                (b, path.display().to_string())
            }
            None => {
                let d = args.dim.unwrap_or(2);
                (weyl_basis(d).map_err(input)?, "weyl".to_string())
            }
        };
        let d = basis.dim();
        if let Some(requested) = args.dim {
            if requested != d {
                return Err(CliError::Input(format!(
                    "--dim {requested} disagrees with basis dimension {d}"
                )));
            }
        }
        let n_states = args.n_states.unwrap_or(d * d);
        if n_states == 0 || n_states > d * d {
            return Err(CliError::Input(format!(
                "--n-states must lie in [1, {}], got {n_states}",
                d * d
            )));
        }
        let spectrum = args
            .spectrum
            .as_deref()
            .map(|s| parse_spectrum(s, d, args.amplitudes, args.normalize, args.seed))
            .transpose()?;
        if !(args.tol > 0.0 && args.tol.is_finite()) {
            return Err(CliError::Input("--tol must be positive".into()));
        }
        let solver = SolverOptions {
            accuracy: args.accuracy,
            max_iterations: args.max_iters,
            step: args.step,
            ..SolverOptions::default()
        };
        Ok(Self {
            basis,
            basis_source,
            spectrum,
            n_states,
            solver,
            strategy: args.strategy.into(),
            tol: args.tol,
            seed: args.seed,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn require_spectrum(&self) -> Result<&ResourceSpectrum, CliError> {
        self.spectrum
            .as_ref()
            .ok_or_else(|| CliError::Input("--spectrum is required for this command".into()))
    }
}

fn input(e: entdist::Error) -> CliError {
    CliError::Input(e.to_string())
}

pub fn parse_spectrum(
    text: &str,
    d: usize,
    amplitudes: bool,
    normalize: bool,
    seed: u64,
) -> Result<ResourceSpectrum, CliError> {
    match text.trim() {
        "uniform" => return ResourceSpectrum::uniform(d).map_err(input),
        "product" => return ResourceSpectrum::product(d).map_err(input),
        "random" => return Ok(random_spectrum(d, &mut seeded_rng(seed))),
        _ => {}
    }
    let values = text
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Input(format!("cannot parse spectrum entry {v:?}")))
        })
        .collect::<Result<Vec<f64>, _>>()?;
    if values.len() != d {
        return Err(CliError::Input(format!(
            "spectrum has {} entries but the dimension is {d}",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(CliError::Input(
            "spectrum entries must be nonnegative".into(),
        ));
    }
    let coeffs: Vec<f64> = if amplitudes {
        values
    } else {
        values.iter().map(|w| w.sqrt()).collect()
    };
    let spec = if normalize {
        ResourceSpectrum::new_normalized(coeffs)
    } else {
        ResourceSpectrum::new(coeffs)
    };
    spec.map_err(input)
}
