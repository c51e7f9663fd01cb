//! Mass-action dynamics `ẋ = S v(x)`: fluxes, Jacobians, equilibria and
//! their transport along a sign fix, and a fixed-step RK4 integrator.

use std::io;

use thiserror::Error;

use crate::matrix::Matrix;
use crate::model::Network;
use crate::scalar::Real;
use crate::signfix::FixReport;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KineticsError {
    #[error("network has reactions without rate constants")]
    MissingRates,
    #[error("expected {expected} rate constants, got {got}")]
    RateCount { expected: usize, got: usize },
    #[error("rate constant {index} must be positive and finite, got {value}")]
    InvalidRate { index: usize, value: f64 },
    #[error("expected a state of length {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("concentration {index} is negative or not finite ({value})")]
    NegativeState { index: usize, value: f64 },
    #[error("concentration {index} must be strictly positive here, got {value}")]
    BoundaryState { index: usize, value: f64 },
    #[error("no equilibrium after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("iteration converged to the boundary of the orthant (species {species:?})")]
    OnBoundary { species: Vec<usize>, residual: f64 },
    #[error("state is not an equilibrium: residual {residual:e} exceeds {tolerance:e}")]
    NotEquilibrium { residual: f64, tolerance: f64 },
    #[error("integration left the orthant or blew up at t = {time}")]
    Diverged { time: f64 },
    #[error("time step must be positive and the horizon nonnegative")]
    BadTimeStep,
}

fn as_f64<F: Real>(v: F) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// Stoichiometry plus positive rate constants; fluxes follow mass action
/// with exponents `-min(0, S_ji)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MassActionSystem<F: Real> {
    stoich: Matrix<F>,
    /// `max(0, -S_ji)`, species × reactions.
    exponents: Matrix<F>,
    rates: Vec<F>,
    network: Option<Network>,
}

impl<F: Real> MassActionSystem<F> {
    pub fn from_matrix(s: Matrix<F>, rates: Vec<F>) -> Result<Self, KineticsError> {
        if rates.len() != s.cols() {
            return Err(KineticsError::RateCount {
                expected: s.cols(),
                got: rates.len(),
            });
        }
        if let Some((index, &k)) = rates
            .iter()
            .enumerate()
            .find(|(_, k)| !(k.is_finite() && **k > F::zero()))
        {
            return Err(KineticsError::InvalidRate {
                index,
                value: as_f64(k),
            });
        }
        let exponents = s.map(|v| if *v < F::zero() { -*v } else { F::zero() });
        Ok(MassActionSystem {
            stoich: s,
            exponents,
            rates,
            network: None,
        })
    }

    /// Uses the rate constants stored on the network.
    pub fn from_network(net: &Network) -> Result<Self, KineticsError> {
        let rates = net.rates().ok_or(KineticsError::MissingRates)?;
        Self::with_rates(net, &rates.into_iter().map(F::lit).collect::<Vec<_>>())
    }

    pub fn with_rates(net: &Network, rates: &[F]) -> Result<Self, KineticsError> {
        let s = net.stoichiometric_matrix().map(F::from_rational);
        let mut sys = Self::from_matrix(s, rates.to_vec())?;
        sys.network = Some(net.clone());
        Ok(sys)
    }

    pub fn network(&self) -> Option<&Network> {
        self.network.as_ref()
    }

    pub fn stoichiometry(&self) -> &Matrix<F> {
        &self.stoich
    }

    pub fn exponents(&self) -> &Matrix<F> {
        &self.exponents
    }

    pub fn rates(&self) -> &[F] {
        &self.rates
    }

    pub fn species_count(&self) -> usize {
        self.stoich.rows()
    }

    pub fn reaction_count(&self) -> usize {
        self.stoich.cols()
    }

    fn check_state(&self, x: &[F], strict: bool) -> Result<(), KineticsError> {
        if x.len() != self.species_count() {
            return Err(KineticsError::Dimension {
                expected: self.species_count(),
                got: x.len(),
            });
        }
        for (index, &v) in x.iter().enumerate() {
            if !v.is_finite() || v < F::zero() {
                return Err(KineticsError::NegativeState {
                    index,
                    value: as_f64(v),
                });
            }
            if strict && v == F::zero() {
                return Err(KineticsError::BoundaryState {
                    index,
                    value: as_f64(v),
                });
            }
        }
        Ok(())
    }

    fn flux_unchecked(&self, x: &[F]) -> Vec<F> {
        (0..self.reaction_count())
            .map(|k| {
                let mut v = self.rates[k];
                for (j, &xj) in x.iter().enumerate() {
                    let e = self.exponents[(j, k)];
                    if e == F::zero() {
                        continue;
                    }
                    v = v * if e.fract() == F::zero() && e < F::lit(64.0) {
                        xj.powi(e.to_i32().unwrap_or(0))
                    } else {
                        xj.powf(e)
                    };
                }
                v
            })
            .collect()
    }

    /// `v_k = k_k ∏_j x_j^{-min(0, S_jk)}` with `0⁰ = 1`.
    pub fn flux(&self, x: &[F]) -> Result<Vec<F>, KineticsError> {
        self.check_state(x, false)?;
        Ok(self.flux_unchecked(x))
    }

    /// `S v(x)`.
    pub fn rhs(&self, x: &[F]) -> Result<Vec<F>, KineticsError> {
        Ok(self.stoich.mul_vec(&self.flux(x)?))
    }

    /// `‖S v(x)‖_∞`.
    pub fn residual(&self, x: &[F]) -> Result<F, KineticsError> {
        Ok(max_abs(&self.rhs(x)?))
    }

    /// `∂v_k/∂x_j`, reactions × species.
    pub fn flux_jacobian(&self, x: &[F]) -> Result<Matrix<F>, KineticsError> {
        self.check_state(x, true)?;
        let v = self.flux_unchecked(x);
        Ok(Matrix::from_fn(self.reaction_count(), self.species_count(), |k, j| {
            self.exponents[(j, k)] * v[k] / x[j]
        }))
    }

    /// `S v'(x)` at a strictly positive state.
    pub fn jacobian(&self, x: &[F]) -> Result<Matrix<F>, KineticsError> {
        Ok(self.stoich.matmul(&self.flux_jacobian(x)?))
    }

    /// Damped Gauss-Newton on `S v(x) = 0` from a positive start. Steps are
    /// least-squares solutions of the normal equations and are halved until
    /// the iterate stays positive and the residual norm drops.
    pub fn find_equilibrium(
        &self,
        x0: &[F],
        opts: &EquilibriumOptions,
    ) -> Result<Equilibrium<F>, KineticsError> {
        self.check_state(x0, true)?;
        let d = self.species_count();
        let free: Vec<usize> = (0..d).filter(|i| !opts.fixed.contains(i)).collect();
        let mut x = x0.to_vec();
        let mut f = self.rhs(&x)?;
        let floor = F::epsilon() * F::lit(16.0);
        let tolerance = F::lit(opts.tolerance).max(floor) * (F::one() + max_abs(&f));
        let norm2 = |v: &[F]| v.iter().fold(F::zero(), |a, &b| a + b * b);
        let mut iterations = 0;
        while max_abs(&f) > tolerance {
            if iterations == opts.max_iterations || free.is_empty() {
                return Err(KineticsError::NoConvergence {
                    iterations,
                    residual: as_f64(max_abs(&f)),
                });
            }
            iterations += 1;
            let jac = self.jacobian(&x)?;
            let jf = Matrix::from_fn(d, free.len(), |i, c| jac[(i, free[c])]);
            let jt = jf.transpose();
            let mut normal = jt.matmul(&jf);
            let scale = (0..free.len()).fold(F::zero(), |m, i| m.max(normal[(i, i)]));
            let lambda = F::lit(opts.regularization).max(F::epsilon() * F::lit(64.0)) * (F::one() + scale);
            for i in 0..free.len() {
                normal[(i, i)] = normal[(i, i)] + lambda;
            }
            let g: Vec<F> = jt.mul_vec(&f).into_iter().map(|v| -v).collect();
            let Some(delta) = normal.solve(&g) else {
                return Err(KineticsError::NoConvergence {
                    iterations,
                    residual: as_f64(max_abs(&f)),
                });
            };
            let base = norm2(&f);
            let mut alpha = F::one();
            let mut accepted = None;
            while alpha > F::lit(1e-30) {
                let mut cand = x.clone();
                for (c, &i) in free.iter().enumerate() {
                    cand[i] = x[i] + alpha * delta[c];
                }
                if cand.iter().all(|&v| v > F::zero() && v.is_finite()) {
                    let fc = self.stoich.mul_vec(&self.flux_unchecked(&cand));
                    if norm2(&fc) < base {
                        accepted = Some((cand, fc));
                        break;
                    }
                }
                alpha = alpha / F::lit(2.0);
            }
            let Some((nx, nf)) = accepted else {
                return Err(KineticsError::NoConvergence {
                    iterations,
                    residual: as_f64(max_abs(&f)),
                });
            };
            x = nx;
            f = nf;
        }
        let scale = x.iter().fold(F::one(), |m, &v| m.max(v));
        let boundary: Vec<usize> = (0..d)
            .filter(|&i| x[i] < F::lit(opts.boundary_threshold) * scale)
            .collect();
        let residual = max_abs(&f);
        if opts.require_interior && !boundary.is_empty() {
            return Err(KineticsError::OnBoundary {
                species: boundary,
                residual: as_f64(residual),
            });
        }
        Ok(Equilibrium {
            x,
            residual,
            tolerance,
            iterations,
            boundary,
        })
    }

    /// Classical fourth-order Runge-Kutta with a fixed step (the last step is shortened).
    pub fn simulate(&self, x0: &[F], t_end: F, dt: F) -> Result<Trajectory<F>, KineticsError> {
        self.check_state(x0, false)?;
        if !(dt > F::zero()) || !(t_end >= F::zero()) {
            return Err(KineticsError::BadTimeStep);
        }
        let eval = |x: &[F]| {
            let clipped: Vec<F> = x.iter().map(|&v| v.max(F::zero())).collect();
            self.stoich.mul_vec(&self.flux_unchecked(&clipped))
        };
        let axpy = |x: &[F], a: F, k: &[F]| -> Vec<F> {
            x.iter().zip(k).map(|(&xi, &ki)| xi + a * ki).collect()
        };
        let mut t = F::zero();
        let mut x = x0.to_vec();
        let mut out = Trajectory {
            times: vec![t],
            states: vec![x.clone()],
        };
        let two = F::lit(2.0);
        let six = F::lit(6.0);
        let slack = F::lit(1e-9);
        while t < t_end {
            let h = dt.min(t_end - t);
            let k1 = eval(&x);
            let k2 = eval(&axpy(&x, h / two, &k1));
            let k3 = eval(&axpy(&x, h / two, &k2));
            let k4 = eval(&axpy(&x, h, &k3));
            for i in 0..x.len() {
                x[i] = x[i] + h / six * (k1[i] + two * k2[i] + two * k3[i] + k4[i]);
            }
            t = if t_end - t <= dt { t_end } else { t + h };
            if x.iter().any(|&v| !v.is_finite() || v < -slack) {
                return Err(KineticsError::Diverged { time: as_f64(t) });
            }
            out.times.push(t);
            out.states.push(x.clone());
        }
        Ok(out)
    }
}

fn max_abs<F: Real>(v: &[F]) -> F {
    v.iter().fold(F::zero(), |m, &x| m.max(x.abs()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumOptions {
    pub max_iterations: usize,
    /// Relative to `1 + ‖S v(x0)‖_∞`.
    pub tolerance: f64,
    /// Tikhonov term on the normal equations, relative to their largest diagonal entry.
    pub regularization: f64,
    /// Reject results with components below `boundary_threshold · max(1, ‖x‖_∞)`.
    pub require_interior: bool,
    pub boundary_threshold: f64,
    /// Components held at their starting values.
    pub fixed: Vec<usize>,
}

impl Default for EquilibriumOptions {
    fn default() -> Self {
        EquilibriumOptions {
            max_iterations: 200,
            tolerance: 1e-9,
            regularization: 1e-12,
            require_interior: true,
            boundary_threshold: 1e-6,
            fixed: Vec::new(),
        }
    }
}

impl EquilibriumOptions {
    pub fn allow_boundary() -> Self {
        EquilibriumOptions {
            require_interior: false,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium<F> {
    pub x: Vec<F>,
    pub residual: F,
    pub tolerance: F,
    pub iterations: usize,
    /// Components that went to (numerically) zero.
    pub boundary: Vec<usize>,
}

/// An equilibrium of the original network and its image under the sign fix.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumPair<F> {
    pub x: Vec<F>,
    pub x_hat: Vec<F>,
    /// (`‖S v(x)‖_∞`, `‖Ŝ v̂(x̂)‖_∞`)
    pub residuals: (F, F),
}

pub(crate) fn rates_through<F: Real>(report: &FixReport, rates: &[F], stage: usize) -> Vec<F> {
    let mut r = rates.to_vec();
    r.extend(report.steps[..stage].iter().map(|s| F::lit(s.added_rate)));
    r
}

/// Fixed system with the original `rates` and the report's added rates.
pub fn fixed_system<F: Real>(
    report: &FixReport,
    rates: &[F],
) -> Result<MassActionSystem<F>, KineticsError> {
    MassActionSystem::with_rates(report.result(), &rates_through(report, rates, report.steps.len()))
}

/// Append `x_∞ = v_ℓ(x) / k` for each step, at any nonnegative state.
pub fn lift_point<F: Real>(
    report: &FixReport,
    rates: &[F],
    x: &[F],
) -> Result<Vec<F>, KineticsError> {
    let mut cur = x.to_vec();
    for (i, step) in report.steps.iter().enumerate() {
        let stage = MassActionSystem::with_rates(&report.stages[i], &rates_through(report, rates, i))?;
        let v = stage.flux(&cur)?;
        cur.push(v[step.modified_column] / F::lit(step.added_rate));
    }
    Ok(cur)
}

/// Extend an equilibrium of the original network step by step with
/// `x_∞ = v_ℓ(x) / k` for each added species.
pub fn lift_equilibrium<F: Real>(
    report: &FixReport,
    rates: &[F],
    x: &[F],
    tolerance: F,
) -> Result<EquilibriumPair<F>, KineticsError> {
    let sys = MassActionSystem::with_rates(report.original(), rates)?;
    let r0 = sys.residual(x)?;
    if r0 > tolerance {
        return Err(KineticsError::NotEquilibrium {
            residual: as_f64(r0),
            tolerance: as_f64(tolerance),
        });
    }
    let cur = lift_point(report, rates, x)?;
    let r1 = fixed_system(report, rates)?.residual(&cur)?;
    let limit = F::lit(10.0) * tolerance;
    if r1 > limit {
        return Err(KineticsError::NotEquilibrium {
            residual: as_f64(r1),
            tolerance: as_f64(limit),
        });
    }
    Ok(EquilibriumPair {
        x: x.to_vec(),
        x_hat: cur,
        residuals: (r0, r1),
    })
}

/// Drop the added species from an equilibrium of the fixed network.
pub fn project_equilibrium<F: Real>(
    report: &FixReport,
    rates: &[F],
    x_hat: &[F],
    tolerance: F,
) -> Result<Vec<F>, KineticsError> {
    let r1 = fixed_system(report, rates)?.residual(x_hat)?;
    if r1 > tolerance {
        return Err(KineticsError::NotEquilibrium {
            residual: as_f64(r1),
            tolerance: as_f64(tolerance),
        });
    }
    let d = report.original().species_count();
    let x = x_hat[..d].to_vec();
    let r0 = MassActionSystem::with_rates(report.original(), rates)?.residual(&x)?;
    let limit = F::lit(10.0) * tolerance;
    if r0 > limit {
        return Err(KineticsError::NotEquilibrium {
            residual: as_f64(r0),
            tolerance: as_f64(limit),
        });
    }
    Ok(x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<F> {
    pub times: Vec<F>,
    pub states: Vec<Vec<F>>,
}

impl<F: Real> Trajectory<F> {
    /// Header `t,<names...>` then one row per time point.
    pub fn write_csv<W: io::Write, S: AsRef<str>>(&self, mut w: W, names: &[S]) -> io::Result<()> {
        write!(w, "t")?;
        for n in names {
            write!(w, ",{}", n.as_ref())?;
        }
        writeln!(w)?;
        for (t, x) in self.times.iter().zip(&self.states) {
            write!(w, "{t}")?;
            for v in x {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactla::is_conserving;
    use crate::random::{log_uniform, random_network, RandomNetworkConfig};
    use crate::signfix::sign_fix;
    use crate::textio::parse_network;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn system(text: &str, rates: &[f64]) -> MassActionSystem<f64> {
        MassActionSystem::with_rates(&parse_network(text).unwrap(), rates).unwrap()
    }

    fn conserving_pair() -> MassActionSystem<f64> {
        let s = Matrix::from_rows(vec![
            vec![-2.0, -1.0, 4.0, 4.0, -4.0],
            vec![-12.0, 4.0, 4.0, 0.0, 0.0],
            vec![4.0, -1.0, -2.0, 0.0, 0.0],
            vec![10.0, -2.0, -6.0, -4.0, 4.0],
        ]);
        MassActionSystem::from_matrix(s, vec![1.0; 5]).unwrap()
    }

    #[test]
    fn flux_examples() {
        let sys = system("2A + B -> 4C", &[1.0]);
        assert_eq!(sys.flux(&[3.0, 5.0, 7.0]).unwrap(), vec![45.0]);
        let sys = system("A -> B\nB + C -> A", &[2.0, 3.0]);
        assert_eq!(sys.flux(&[1.0, 1.0, 1.0]).unwrap(), vec![2.0, 3.0]);
        let x = [1.5, 0.5, 2.0, 0.75];
        let v = conserving_pair().flux(&x).unwrap();
        let expect = [
            x[0].powi(2) * x[1].powi(12),
            x[0] * x[2] * x[3].powi(2),
            x[2].powi(2) * x[3].powi(6),
            x[3].powi(4),
            x[0].powi(4),
        ];
        for (a, b) in v.iter().zip(expect) {
            assert!((a - b).abs() <= 1e-14 * b.abs());
        }
        assert!(matches!(
            conserving_pair().flux(&[1.0, -1.0, 1.0, 1.0]),
            Err(KineticsError::NegativeState { index: 1, .. })
        ));
    }

    #[test]
    fn linear_jacobian() {
        let sys = system("A -> B", &[2.0]);
        let j = sys.jacobian(&[3.0, 1.0]).unwrap();
        assert_eq!(j, Matrix::from_rows(vec![vec![-2.0, 0.0], vec![2.0, 0.0]]));
        assert!(matches!(
            sys.jacobian(&[0.0, 1.0]),
            Err(KineticsError::BoundaryState { .. })
        ));
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let net = random_network(&mut rng, &RandomNetworkConfig::default());
            let rates = log_uniform(&mut rng, net.reaction_count(), 0.5, 2.0);
            let sys = MassActionSystem::with_rates(&net, &rates).unwrap();
            let x = log_uniform(&mut rng, net.species_count(), 0.5, 2.0);
            let j = sys.jacobian(&x).unwrap();
            let d = x.len();
            for c in 0..d {
                let h = 1e-6 * x[c];
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[c] += h;
                xm[c] -= h;
                let fp = sys.rhs(&xp).unwrap();
                let fm = sys.rhs(&xm).unwrap();
                for r in 0..d {
                    let fd = (fp[r] - fm[r]) / (2.0 * h);
                    assert!((fd - j[(r, c)]).abs() <= 1e-6 * (1.0 + j.max_abs()));
                }
            }
        }
    }

    #[test]
    fn flux_derivative_follows_reactants() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let net = random_network(&mut rng, &RandomNetworkConfig::default());
            let sys = MassActionSystem::with_rates(&net, &vec![1.0; net.reaction_count()]).unwrap();
            let x = log_uniform(&mut rng, net.species_count(), 0.5, 2.0);
            let dv = sys.flux_jacobian(&x).unwrap();
            let s = net.stoichiometric_matrix();
            for k in 0..net.reaction_count() {
                for j in 0..net.species_count() {
                    assert!(dv[(k, j)] >= 0.0);
                    assert_eq!(dv[(k, j)] != 0.0, num_traits::Signed::is_negative(&s[(j, k)]));
                }
            }
        }
    }

    #[test]
    fn conserving_pair_equilibrium_at_unit_rates() {
        let opts = EquilibriumOptions {
            fixed: vec![1],
            ..Default::default()
        };
        let eq = conserving_pair().find_equilibrium(&[1.0, 1.0, 1.0, 1.0], &opts).unwrap();
        for (a, b) in eq.x.iter().zip([0.5, 1.0, 4.0, 0.5]) {
            assert!((a - b).abs() <= 1e-8, "{:?}", eq.x);
        }
    }

    #[test]
    fn detailed_balance_and_no_equilibrium() {
        let sys = system("A <-> B", &[1.0, 1.0]);
        let eq = sys.find_equilibrium(&[1.0, 1.0], &Default::default()).unwrap();
        assert!(eq.residual <= 1e-9);
        let sys = system("A <-> B", &[1.0, 1.0]);
        let eq = sys.find_equilibrium(&[2.0, 0.5], &Default::default()).unwrap();
        assert!((eq.x[0] - eq.x[1]).abs() <= 1e-8);

        let sys = system("A -> B", &[1.0]);
        assert!(sys.find_equilibrium(&[1.0, 1.0], &Default::default()).is_err());
    }

    #[test]
    fn lift_and_project_round_trip() {
        let net = parse_network("2A -> 3B + C\nA + B -> C\n3B + C -> 2A\n").unwrap();
        let report = sign_fix(&net, None, 1.0).unwrap();
        let rates = [1.0f64; 3];
        let sys = MassActionSystem::with_rates(&net, &rates).unwrap();
        let eq = sys
            .find_equilibrium(&[1.0, 1.0, 1.0], &EquilibriumOptions::allow_boundary())
            .unwrap();
        let pair = lift_equilibrium(&report, &rates, &eq.x, eq.tolerance).unwrap();
        assert!(pair.residuals.1 <= 1e-8);
        let back = project_equilibrium(&report, &rates, &pair.x_hat, 1e-8).unwrap();
        for (a, b) in back.iter().zip(&eq.x) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300));
        }

        let mut wrong = pair.x_hat.clone();
        *wrong.last_mut().unwrap() += 0.5;
        assert!(project_equilibrium(&report, &rates, &wrong, 1e-8).is_err());
    }

    #[test]
    fn boundary_equilibrium_lifts() {
        let net = parse_network("A -> 2B\nA + B -> C\nC -> A").unwrap();
        let report = sign_fix(&net, None, 1.0).unwrap();
        let x = [0.0, 1.0, 0.0];
        let pair = lift_equilibrium(&report, &[1.0; 3], &x, 1e-12).unwrap();
        assert_eq!(pair.x_hat, vec![0.0, 1.0, 0.0, 0.0]);
        assert_eq!(project_equilibrium(&report, &[1.0; 3], &pair.x_hat, 1e-12).unwrap(), x);
    }

    #[test]
    fn lift_value_is_flux_over_rate() {
        let net = parse_network("A -> 2B\nA + B -> C").unwrap();
        let report = sign_fix(&net, None, 2.0).unwrap();
        let x = [0.0, 1.0, 5.0];
        let pair = lift_equilibrium(&report, &[3.0, 1.0], &x, 1e-12).unwrap();
        assert_eq!(pair.x_hat[3], 0.0);
        let r = rates_through(&report, &[3.0, 1.0], 1);
        assert_eq!(r, vec![3.0, 1.0, 2.0]);
    }

    #[test]
    fn rk4_decay_and_conservation() {
        let sys = system("A -> B", &[1.0]);
        let tr = sys.simulate(&[1.0, 0.0], 1.0, 0.01).unwrap();
        let last = tr.states.last().unwrap();
        assert!((last[0] - (-1.0f64).exp()).abs() <= 1e-6);
        assert_eq!(*tr.times.last().unwrap(), 1.0);

        let net = parse_network("A + B <-> C\nC -> D + A\nD -> B").unwrap();
        let m = is_conserving(&net.stoichiometric_matrix());
        assert!(m.conserving);
        let w: Vec<f64> = m.witness.unwrap().iter().map(f64::from_rational).collect();
        let sys = MassActionSystem::with_rates(&net, &[1.0, 0.5, 2.0, 1.0]).unwrap();
        let x0 = [1.0, 2.0, 0.5, 0.1];
        let tr = sys.simulate(&x0, 10.0, 0.01).unwrap();
        let total = |x: &[f64]| x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
        let m0 = total(&x0);
        for x in &tr.states {
            assert!((total(x) - m0).abs() <= 1e-6 * m0.abs());
        }

        let zero = sys.simulate(&[0.0; 4], 1.0, 0.1).unwrap();
        assert!(zero.states.iter().all(|x| x.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn single_precision_works() {
        let net = parse_network("A <-> B").unwrap();
        let sys = MassActionSystem::<f32>::with_rates(&net, &[1.0, 2.0]).unwrap();
        let eq = sys.find_equilibrium(&[1.0, 1.0], &Default::default()).unwrap();
        assert!((eq.x[0] - 2.0 * eq.x[1]).abs() < 1e-4);
    }

    #[test]
    fn csv_output() {
        let sys = system("A -> B", &[1.0]);
        let tr = sys.simulate(&[1.0, 0.0], 0.5, 0.25).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf, &["A", "B"]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,A,B\n0,1,0\n0.25,"));
        assert_eq!(text.lines().count(), 4);
    }
}
