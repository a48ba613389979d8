use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeshError {
    #[error("mesh needs at least one subdivision per axis")]
    ZeroSubdivisions,
    #[error("triangle index {index} out of range ({count} triangles)")]
    TriangleOutOfRange { index: usize, count: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FemError {
    #[error("unsupported quadrature exactness degree {0} (supported: 2, 4, 6, 10)")]
    UnsupportedQuadrature(usize),
    #[error("unsupported polynomial degree {0} (supported: 1, 2)")]
    UnsupportedDegree(usize),
    #[error("weight shape {found} does not match the {form} form")]
    ShapeMismatch { form: &'static str, found: &'static str },
    #[error("coefficient vector has length {found}, space has {expected} dofs")]
    LengthMismatch { expected: usize, found: usize },
    #[error("functions live on different meshes")]
    MeshMismatch,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinearSolveError {
    #[error("matrix is structurally singular (pivot {0})")]
    Singular(usize),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("linear solve produced non-finite values")]
    NonFinite,
    #[error("linear solver failure: {0}")]
    Backend(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProjectionError {
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Solve(#[from] LinearSolveError),
    #[error("pressure projection needs zero-mean input, got mean {0:e}")]
    NonzeroMean(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("gamma must be positive, got {0}")]
    NonPositiveGamma(f64),
    #[error("{name} must stay positive on [-2, 3], minimum sampled value {min:e}")]
    NonPositiveCoefficient { name: &'static str, min: f64 },
    #[error("potential must be nonnegative on [-2, 3], minimum sampled value {0:e}")]
    NegativePotential(f64),
    #[error("{name} has degree {degree}, at most {max} allowed")]
    DegreeTooHigh {
        name: &'static str,
        degree: usize,
        max: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchemeError {
    #[error("Newton did not converge in {iterations} iterations (last residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },
    #[error("linear solve failed: {0}")]
    LinearSolveFailed(#[from] LinearSolveError),
    #[error("initial projection failed: {0}")]
    Projection(#[from] ProjectionError),
    #[error("step {interval} failed: {source}")]
    AtInterval {
        interval: usize,
        #[source]
        source: Box<SchemeError>,
    },
    #[error("invalid run settings: {0}")]
    InvalidSettings(String),
    #[error("{quantity} {value:e} exceeds tolerance {tol:e}")]
    ToleranceExceeded {
        quantity: &'static str,
        value: f64,
        tol: f64,
    },
    #[error(transparent)]
    Fem(FemError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagnosticsError {
    #[error("EOC needs positive errors, entry {index} is {value:e}")]
    NonPositiveError { index: usize, value: f64 },
    #[error("solutions are not nested: {0}")]
    NotNested(String),
    #[error(transparent)]
    Fem(#[from] FemError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    DuplicateKey { line: usize, key: String },
    #[error("invalid {field}: {message}")]
    Invalid { field: &'static str, message: String },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error("level {level}: {source}")]
    Level {
        level: usize,
        #[source]
        source: Box<CliError>,
    },
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
}
