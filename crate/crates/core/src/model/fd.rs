//! Central finite differences over the slots of a [`Phase`].

use nalgebra::{DMatrix, DVector};

use super::Phase;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Slot {
    Q(usize),
    V(usize),
    Entropy,
    Moles,
    Time,
}

pub(crate) fn scaled_step(value: f64, h: f64) -> f64 {
    h * value.abs().max(1.0)
}

/// Mole numbers carry their own scale, so their step is relative to `|N|`.
fn slot_step(x: &Phase, slot: Slot, h: f64) -> f64 {
    match slot {
        Slot::Moles if x.moles != 0.0 => h * x.moles.abs(),
        _ => scaled_step(slot_value(x, slot), h),
    }
}

fn slot_value(x: &Phase, slot: Slot) -> f64 {
    match slot {
        Slot::Q(i) => x.q[i],
        Slot::V(i) => x.v[i],
        Slot::Entropy => x.entropy,
        Slot::Moles => x.moles,
        Slot::Time => x.t,
    }
}

pub(crate) fn shifted(x: &Phase, slot: Slot, delta: f64) -> Phase {
    let mut y = x.clone();
    match slot {
        Slot::Q(i) => y.q[i] += delta,
        Slot::V(i) => y.v[i] += delta,
        Slot::Entropy => y.entropy += delta,
        Slot::Moles => y.moles += delta,
        Slot::Time => y.t += delta,
    }
    y
}

pub(crate) fn central_scalar(x: &Phase, slot: Slot, h: f64, f: impl Fn(&Phase) -> f64) -> f64 {
    let step = slot_step(x, slot, h);
    (f(&shifted(x, slot, step)) - f(&shifted(x, slot, -step))) / (2.0 * step)
}

pub(crate) fn central_vector(
    x: &Phase,
    slot: Slot,
    h: f64,
    f: impl Fn(&Phase) -> DVector<f64>,
) -> DVector<f64> {
    let step = slot_step(x, slot, h);
    (f(&shifted(x, slot, step)) - f(&shifted(x, slot, -step))) / (2.0 * step)
}

/// Jacobian of a vector field with respect to the `q` or `v` block, column by column.
pub(crate) fn block_jacobian(
    x: &Phase,
    block: fn(usize) -> Slot,
    h: f64,
    rows: usize,
    f: impl Fn(&Phase) -> DVector<f64>,
) -> DMatrix<f64> {
    let n = x.q.len();
    let mut jac = DMatrix::zeros(rows, n);
    for j in 0..n {
        jac.set_column(j, &central_vector(x, block(j), h, &f));
    }
    jac
}
