use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{
    balance_force, closed_rates, constraint_matrix, degenerate_directions, momentum_rate,
    AlgebraicBalance, Phase, RateFn, ThermoModel,
};

/// Condition estimate above which a KKT matrix is treated as singular.
pub const KKT_CONDITION_LIMIT: f64 = 1e12;

/// Saddle-point system for the accelerations `v̇` and multipliers `μ`.
///
/// For a regular mass matrix this is `[[M, −ωᵀ], [ω, 0]] (v̇, μ) = (f, −ω̇ v)`.
/// When `M` is singular along directions `Z ⊂ ker ω`, the balance rows along
/// `Z` carry no acceleration; they are replaced by the time derivative of the
/// algebraic condition `Zᵀ f = 0`, and the remaining balance rows are
/// projected on the complement `P` of `Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct KktSystem {
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
    pub dof: usize,
    pub constraints: usize,
    /// Number of inertia-free directions (0 for regular mass matrices).
    pub degenerate: usize,
}

impl KktSystem {
    /// Ratio of extreme singular values.
    pub fn condition_estimate(&self) -> f64 {
        let s = linalg::singular_values(&self.matrix);
        let max = s.iter().cloned().fold(0.0, f64::max);
        let min = s.iter().cloned().fold(f64::INFINITY, f64::min);
        if min == 0.0 || !min.is_finite() {
            f64::INFINITY
        } else {
            max / min
        }
    }

    /// Returns `(v̇, μ, condition estimate)`.
    pub fn solve(&self) -> Result<(DVector<f64>, DVector<f64>, f64)> {
        let condition = self.condition_estimate();
        if !(condition <= KKT_CONDITION_LIMIT) {
            return Err(Error::KktSingular { condition });
        }
        let sol = self
            .matrix
            .clone()
            .lu()
            .solve(&self.rhs)
            .ok_or(Error::KktSingular { condition })?;
        let vdot = sol.rows(0, self.dof).into_owned();
        let mu = sol.rows(self.dof, self.constraints).into_owned();
        Ok((vdot, mu, condition))
    }
}

/// Assembles the KKT system at `x` with the closed-system entropy rate.
pub fn assemble_kkt(model: &dyn ThermoModel, x: &Phase) -> Result<KktSystem> {
    crate::model::check_dims(model, x)?;
    let rates = closed_rates(model);
    let (sdot, ndot) = rates(x)?;
    assemble_with_rates(model, x, &rates, sdot, ndot)
}

pub(crate) fn assemble_with_rates(
    model: &dyn ThermoModel,
    x: &Phase,
    rates: RateFn<'_>,
    sdot: f64,
    ndot: f64,
) -> Result<KktSystem> {
    let n = model.dof();
    let omega = constraint_matrix(model, x)?;
    let m = omega.nrows();
    let mass = model.mass_matrix(x);
    if mass.shape() != (n, n) {
        return Err(Error::dim("mass matrix", n * n, mass.nrows() * mass.ncols()));
    }
    let f = balance_force(model, x, sdot, ndot);
    let omega_dot = model.constraint_rate(x);

    let z = degenerate_directions(model, x, &omega);
    let k = z.ncols();
    let mut matrix = DMatrix::zeros(n + m, n + m);
    let mut rhs = DVector::zeros(n + m);
    if k == 0 {
        matrix.view_mut((0, 0), (n, n)).copy_from(&mass);
        matrix.view_mut((0, n), (n, m)).copy_from(&(-omega.transpose()));
        rhs.rows_mut(0, n).copy_from(&f);
    } else {
        let p = linalg::null_space(&z.transpose());
        let balance = AlgebraicBalance {
            model,
            directions: z,
            rates,
        };
        let r = n - k;
        matrix.view_mut((0, 0), (r, n)).copy_from(&(p.transpose() * &mass));
        matrix
            .view_mut((0, n), (r, m))
            .copy_from(&(-(p.transpose() * omega.transpose())));
        rhs.rows_mut(0, r).copy_from(&(p.transpose() * &f));
        matrix
            .view_mut((r, 0), (k, n))
            .copy_from(&balance.velocity_jacobian(x)?);
        rhs.rows_mut(r, k).copy_from(&(-balance.drift(x)?));
    }
    matrix.view_mut((n, 0), (m, n)).copy_from(&omega);
    rhs.rows_mut(n, m).copy_from(&(-(omega_dot * &x.v)));
    Ok(KktSystem {
        matrix,
        rhs,
        dof: n,
        constraints: m,
        degenerate: k,
    })
}

/// `ṗ − ∂L/∂q − F^fr − F^ext − ωᵀμ` for given accelerations and multipliers.
pub fn multiplier_residual(
    model: &dyn ThermoModel,
    x: &Phase,
    vdot: &DVector<f64>,
    mu: &DVector<f64>,
    sdot: f64,
    ndot: f64,
) -> Result<DVector<f64>> {
    let omega = constraint_matrix(model, x)?;
    Ok(momentum_rate(model, x, vdot, sdot, ndot)
        - model.dl_dq(x)
        - model.friction(x)
        - model.external_force(x)
        - omega.transpose() * mu)
}

/// Everything the integrators need at one phase point.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Rates {
    pub vdot: DVector<f64>,
    pub mu: DVector<f64>,
    pub sdot: f64,
    pub ndot: f64,
    pub condition: f64,
}
