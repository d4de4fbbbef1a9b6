use thiserror::Error;

use crate::fuchsian::OrbitBall;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Clone, Error)]
pub enum Error {
    /// Input outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A series or quadrature did not reach its tolerance. `partial` carries the
    /// best value obtained, when there is one.
    #[error("numeric error: {msg}")]
    Numeric { msg: String, partial: Option<f64> },

    /// An argument-principle contour passed too close to a zero.
    #[error("contour error: {0}")]
    Contour(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Orbit enumeration hit its element or depth cap. The partial ball has
    /// `complete == false`.
    #[error("orbit enumeration budget exceeded ({} elements kept)", .0.elements.len())]
    Budget(Box<OrbitBall>),
}

// Budget errors carry a whole orbit ball; keep debug output readable.
impl std::fmt::Debug for Error {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Error::Domain(m) => f.debug_tuple("Domain").field(m).finish(),
            Error::Numeric { msg, partial } => f
                .debug_struct("Numeric")
                .field("msg", msg)
                .field("partial", partial)
                .finish(),
            Error::Contour(m) => f.debug_tuple("Contour").field(m).finish(),
            Error::Unsupported(m) => f.debug_tuple("Unsupported").field(m).finish(),
            Error::Budget(b) => f
                .debug_struct("Budget")
                .field("label", &b.label)
                .field("radius", &b.radius)
                .field("elements", &b.elements.len())
                .finish(),
        }
    }
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>, partial: Option<f64>) -> Self {
        Error::Numeric {
            msg: msg.into(),
            partial,
        }
    }
}
