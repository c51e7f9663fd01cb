//! Sign patterns of mass-action Jacobians and the sign-fixing construction
//! for chemical reaction networks, with exact kernel, equilibrium, spectral
//! and deficiency audits.
//!
//! Numeric code is generic over [`scalar::Real`] (`f32`, `f64`); exact linear
//! algebra is generic over [`scalar::Exact`] and used with [`Rational`].

pub mod deficiency;
pub mod exactla;
pub mod graphio;
pub mod kinetics;
pub mod matrix;
pub mod model;
pub mod random;
pub mod scalar;
pub mod signcheck;
pub mod signfix;
pub mod spectra;
pub mod textio;

pub type Rational = num_rational::BigRational;
pub type RationalMatrix = matrix::Matrix<Rational>;
pub type RealMatrix = matrix::Matrix<f64>;
pub type MassActionSystemF64 = kinetics::MassActionSystem<f64>;
pub type MassActionSystemF32 = kinetics::MassActionSystem<f32>;

pub use deficiency::{deficiency, delta_audit, DeficiencyReport, DeltaAudit};
pub use kinetics::{EquilibriumOptions, KineticsError, MassActionSystem};
pub use matrix::Matrix;
pub use model::{Complex, Network, Reaction, Species};
pub use signcheck::{find_bad_submatrices, jacobian_sign_status, BadClass, BadSubmatrix};
pub use signfix::{fix_one, sign_fix, single_step_report, FixReport, FixStep};
pub use textio::{parse_network, serialize_network, ParseError};
