use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("pose is ambiguous at a pole of the conceptual manifold")]
    GimbalDegenerate,

    #[error("invalid pose: {0}")]
    InvalidPose(String),

    #[error("bordered system is singular (condition number {condition:.3e})")]
    SingularSystem { condition: f64 },

    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("image shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("mapping models do not share a kernel configuration: {0}")]
    ConfigMismatch(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("every particle likelihood underflowed to zero")]
    AllZeroLikelihoods,

    #[error("image is empty")]
    EmptyImage,

    #[error("depth image contains no valid pixels")]
    AllHoles,

    #[error("support set is empty")]
    EmptySupport,

    #[error("length mismatch: {left} predictions vs {right} ground-truth entries")]
    LengthMismatch { left: usize, right: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("missing media file {0}")]
    MissingMedia(PathBuf),

    #[error("invalid angles in record on line {record}: {message}")]
    InvalidAngles { record: usize, message: String },

    #[error("unsupported model container version {0}")]
    UnsupportedVersion(u32),

    #[error("corrupt model container: {0}")]
    CorruptContainer(String),

    #[error("view synthesis needs a model trained on raw intensities")]
    RawFeaturesRequired,

    #[error("ill-posed: {centers} mapping centers but object {object_id} has only {views} training views")]
    IllPosed {
        object_id: String,
        centers: usize,
        views: usize,
    },

    #[error("manifest {0} has an empty training split")]
    EmptyTrainingSplit(PathBuf),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("object {object_id}: {source}")]
    Object {
        object_id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}

impl Error {
    pub(crate) fn read(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
        move |source| Error::Read {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn for_object(self, object_id: &str) -> Self {
        Error::Object {
            object_id: object_id.to_string(),
            source: Box::new(self),
        }
    }

    /// Process exit code: 2 usage, 3 data, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Object { source, .. } => source.exit_code(),
            Error::InvalidConfig(_) => 2,
            Error::GimbalDegenerate
            | Error::SingularSystem { .. }
            | Error::NumericalFailure(_)
            | Error::AllZeroLikelihoods => 4,
            _ => 3,
        }
    }
}
