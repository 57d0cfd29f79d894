use srir_subspace::analyze::AnalyzeError;
use srir_subspace::decompose::DecomposeError;
use srir_subspace::io::IoError;
use srir_subspace::simulate::SimulateError;
use srir_subspace::sphere::SphereError;

/// Failure reported on stderr as `{"error": kind, "message": text}`.
#[derive(Debug)]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(kind: &'static str, message: impl Into<String>) -> Self {
        Self { kind, message: message.into() }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self.kind, "message": self.message }).to_string()
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        let kind = match &e {
            IoError::Io { .. } => "io",
            IoError::MalformedHeader { .. } => "malformed_header",
            IoError::UnsupportedCodec { .. } => "unsupported_codec",
            IoError::TruncatedData { .. } => "truncated_data",
            IoError::Parse { .. } => "parse",
            IoError::InvalidConfig(_) => "config",
            IoError::Sphere(_) => "geometry",
        };
        Self::new(kind, e.to_string())
    }
}

impl From<DecomposeError> for CliError {
    fn from(e: DecomposeError) -> Self {
        Self::new("decompose", e.to_string())
    }
}

impl From<SimulateError> for CliError {
    fn from(e: SimulateError) -> Self {
        Self::new("simulate", e.to_string())
    }
}

impl From<AnalyzeError> for CliError {
    fn from(e: AnalyzeError) -> Self {
        Self::new("analyze", e.to_string())
    }
}

impl From<SphereError> for CliError {
    fn from(e: SphereError) -> Self {
        Self::new("geometry", e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::new("io", e.to_string())
    }
}
