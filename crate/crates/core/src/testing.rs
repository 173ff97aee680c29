//! Closed-form models shared by the unit tests.

use nalgebra::{DMatrix, DVector};

use crate::model::custom::CustomModel;
use crate::model::Phase;

pub fn phase(q: &[f64], v: &[f64], s: f64) -> Phase {
    Phase::new(DVector::from_row_slice(q), DVector::from_row_slice(v), s)
}

/// `L = ½ m v² − T S` with friction `−r v` and a constant force.
pub fn particle(mass: f64, temperature: f64, r: f64, force: f64) -> CustomModel {
    CustomModel::builder(1)
        .lagrangian(move |x| 0.5 * mass * x.v[0] * x.v[0] - temperature * x.entropy)
        .dl_dq(|_| DVector::zeros(1))
        .dl_dv(move |x| DVector::from_element(1, mass * x.v[0]))
        .dl_ds(move |_| -temperature)
        .mass_matrix(move |_| DMatrix::from_element(1, 1, mass))
        .friction(move |x| DVector::from_element(1, -r * x.v[0]))
        .external_force(move |_| DVector::from_element(1, force))
        .build_unchecked()
        .unwrap()
}

/// Two unit masses on a line tied by `v₁ = v₂`, with `L = ½|v|² − T S`.
pub fn tied_pair(temperature: f64, f: [f64; 2]) -> CustomModel {
    CustomModel::builder(2)
        .lagrangian(move |x| 0.5 * x.v.norm_squared() - temperature * x.entropy)
        .dl_dq(|_| DVector::zeros(2))
        .dl_dv(|x| x.v.clone())
        .dl_ds(move |_| -temperature)
        .mass_matrix(|_| DMatrix::identity(2, 2))
        .external_force(move |_| DVector::from_row_slice(&f))
        .constraints(1, |_| DMatrix::from_row_slice(1, 2, &[1.0, -1.0]))
        .build_unchecked()
        .unwrap()
}

/// `L = ½ v² + ¼ v⁴ − T S`.
pub fn quartic(temperature: f64) -> CustomModel {
    CustomModel::builder(1)
        .lagrangian(move |x| {
            let v = x.v[0];
            0.5 * v * v + 0.25 * v.powi(4) - temperature * x.entropy
        })
        .dl_dq(|_| DVector::zeros(1))
        .dl_dv(|x| DVector::from_element(1, x.v[0] + x.v[0].powi(3)))
        .dl_ds(move |_| -temperature)
        .mass_matrix(|x| DMatrix::from_element(1, 1, 1.0 + 3.0 * x.v[0] * x.v[0]))
        .build_unchecked()
        .unwrap()
}
