use slowquench::evolve::EvolveError;
use slowquench::invariants::InvariantError;
use slowquench::lz::LzError;
use slowquench::surfaces::SurfaceError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("gapless: {0}")]
    Gapless(String),
    #[error("not quantized: {0}")]
    NonQuantized(String),
    #[error("integrator: {0}")]
    Integrator(String),
    #[error("{0}")]
    Failed(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Gapless(_) => 3,
            CliError::NonQuantized(_) => 4,
            CliError::Integrator(_) => 5,
            CliError::Failed(_) | CliError::Io(_) => 1,
        }
    }
}

impl From<LzError> for CliError {
    fn from(e: LzError) -> Self {
        match e {
            LzError::GaplessPoint(_) => CliError::Gapless(e.to_string()),
            LzError::InvalidField { .. } | LzError::NoSis => CliError::Failed(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<SurfaceError> for CliError {
    fn from(e: SurfaceError) -> Self {
        match e {
            SurfaceError::GaplessNode { .. } => CliError::Gapless(e.to_string()),
            SurfaceError::BadExtent(_) | SurfaceError::BadDimension(_) => CliError::Config(e.to_string()),
            SurfaceError::Lz(inner) => inner.into(),
            _ => CliError::Failed(e.to_string()),
        }
    }
}

impl From<InvariantError> for CliError {
    fn from(e: InvariantError) -> Self {
        match e {
            InvariantError::Surface(inner) => inner.into(),
            InvariantError::Lz(inner) => inner.into(),
            InvariantError::NonQuantized { .. } | InvariantError::DegenerateSign { .. } | InvariantError::InconsistentEvidence(_) => {
                CliError::NonQuantized(e.to_string())
            }
            InvariantError::InvalidPipeline(_) => CliError::Config(e.to_string()),
        }
    }
}

impl From<EvolveError> for CliError {
    fn from(e: EvolveError) -> Self {
        match e {
            EvolveError::StiffnessFailure { .. } | EvolveError::BadStart { .. } => CliError::Integrator(e.to_string()),
            EvolveError::Lz(inner) => inner.into(),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Failed(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Failed(e.to_string())
    }
}
