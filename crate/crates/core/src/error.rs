use thiserror::Error;

use crate::model::SpherePoint;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("discriminant requires a 3x3 matrix, got {0}x{0}")]
    UnsupportedDimension(usize),

    #[error("bands {pair:?} are not degenerate at the base point (gap {gap:e})")]
    NotDegenerate { pair: (usize, usize), gap: f64 },

    #[error("local two-level Jacobian is singular (normalized determinant {normalized_det:e})")]
    RankDeficient { normalized_det: f64 },

    #[error("spectral gap {gap:e} at {point} is below the floor {floor:e}")]
    NearDegeneracy { point: SpherePoint, gap: f64, floor: f64 },

    #[error("plaquette sum is not integral (max deviation {deviation:.4} at mesh {mesh_size})")]
    NonIntegral { deviation: f64, mesh_size: usize },

    #[error("Chern numbers did not stabilise up to mesh {mesh_size}")]
    Unstable { mesh_size: usize },

    #[error("crossing direction is tangent to the wall (normal component {0:.3})")]
    DirectionTangent(f64),

    #[error("control point ({a}, {b}) is not on wall {wall}")]
    NotOnWall { wall: String, a: f64, b: f64 },

    #[error("crossing point is within {distance:.3} of wall {other}; intersections are non-generic")]
    NearIntersection { other: String, distance: f64 },

    #[error("propagated Chern numbers disagree for domain {domain}: {first:?} vs {second:?}")]
    PropagationConflict {
        domain: usize,
        first: Vec<i64>,
        second: Vec<i64>,
    },

    #[error("domain with signature {signature} has no representative at distance >= {margin} from all walls")]
    ChartIncomplete { signature: String, margin: f64 },

    #[error("rotational quantum number must be an integer >= 1, got {0}")]
    InvalidJ(u32),

    #[error("bands are not well separated (2nd gap {second:e}, 3rd gap {third:e})")]
    AmbiguousBands { second: f64, third: f64 },
}

impl Error {
    /// Stable machine-readable identifier used in JSON output.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::NotHermitian(_) => "not_hermitian",
            Error::UnsupportedDimension(_) => "unsupported_dimension",
            Error::NotDegenerate { .. } => "not_degenerate",
            Error::RankDeficient { .. } => "rank_deficient",
            Error::NearDegeneracy { .. } => "near_degeneracy",
            Error::NonIntegral { .. } => "non_integral",
            Error::Unstable { .. } => "unstable",
            Error::DirectionTangent(_) => "direction_tangent",
            Error::NotOnWall { .. } => "not_on_wall",
            Error::NearIntersection { .. } => "near_intersection",
            Error::PropagationConflict { .. } => "propagation_conflict",
            Error::ChartIncomplete { .. } => "chart_incomplete",
            Error::InvalidJ(_) => "invalid_j",
            Error::AmbiguousBands { .. } => "ambiguous_bands",
        }
    }
}
