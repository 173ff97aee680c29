use super::Trajectory;

/// Per-interval first-law defects of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyBalanceReport {
    pub max_defect: f64,
    /// `|ΔE − ∫P dt|` for each step, where `P` is the supplied power
    /// integrated alongside the state by the same scheme.
    pub series: Vec<f64>,
}

pub fn energy_balance_report(trajectory: &Trajectory) -> EnergyBalanceReport {
    let series: Vec<f64> = trajectory
        .samples
        .windows(2)
        .map(|w| ((w[1].energy - w[0].energy) - (w[1].work - w[0].work)).abs())
        .collect();
    let max_defect = series.iter().cloned().fold(0.0, f64::max);
    EnergyBalanceReport { max_defect, series }
}
