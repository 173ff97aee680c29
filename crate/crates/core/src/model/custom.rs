//! Models assembled from closures.

use nalgebra::{DMatrix, DVector};

use super::{register_check, Phase, ThermoModel, DEFAULT_TEMPERATURE_FLOOR};
use crate::error::{Error, Result};

type Scalar = Box<dyn Fn(&Phase) -> f64 + Send + Sync>;
type Vector = Box<dyn Fn(&Phase) -> DVector<f64> + Send + Sync>;
type Matrix = Box<dyn Fn(&Phase) -> DMatrix<f64> + Send + Sync>;

/// A [`ThermoModel`] whose evaluators are closures.
pub struct CustomModel {
    n: usize,
    m: usize,
    lagrangian: Scalar,
    dl_dq: Vector,
    dl_dv: Vector,
    dl_ds: Scalar,
    dl_dn: Option<Scalar>,
    mass_matrix: Matrix,
    friction: Option<Vector>,
    external_force: Option<Vector>,
    constraint_forms: Option<Matrix>,
    constraint_rate: Option<Matrix>,
    temperature_floor: f64,
}

impl std::fmt::Debug for CustomModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CustomModel")
            .field("n", &self.n)
            .field("m", &self.m)
            .finish_non_exhaustive()
    }
}

impl CustomModel {
    pub fn builder(n: usize) -> CustomModelBuilder {
        CustomModelBuilder {
            n,
            m: 0,
            lagrangian: None,
            dl_dq: None,
            dl_dv: None,
            dl_ds: None,
            dl_dn: None,
            mass_matrix: None,
            friction: None,
            external_force: None,
            constraint_forms: None,
            constraint_rate: None,
            temperature_floor: DEFAULT_TEMPERATURE_FLOOR,
        }
    }
}

pub struct CustomModelBuilder {
    n: usize,
    m: usize,
    lagrangian: Option<Scalar>,
    dl_dq: Option<Vector>,
    dl_dv: Option<Vector>,
    dl_ds: Option<Scalar>,
    dl_dn: Option<Scalar>,
    mass_matrix: Option<Matrix>,
    friction: Option<Vector>,
    external_force: Option<Vector>,
    constraint_forms: Option<Matrix>,
    constraint_rate: Option<Matrix>,
    temperature_floor: f64,
}

impl CustomModelBuilder {
    pub fn lagrangian(mut self, f: impl Fn(&Phase) -> f64 + Send + Sync + 'static) -> Self {
        self.lagrangian = Some(Box::new(f));
        self
    }

    pub fn dl_dq(mut self, f: impl Fn(&Phase) -> DVector<f64> + Send + Sync + 'static) -> Self {
        self.dl_dq = Some(Box::new(f));
        self
    }

    pub fn dl_dv(mut self, f: impl Fn(&Phase) -> DVector<f64> + Send + Sync + 'static) -> Self {
        self.dl_dv = Some(Box::new(f));
        self
    }

    pub fn dl_ds(mut self, f: impl Fn(&Phase) -> f64 + Send + Sync + 'static) -> Self {
        self.dl_ds = Some(Box::new(f));
        self
    }

    pub fn dl_dn(mut self, f: impl Fn(&Phase) -> f64 + Send + Sync + 'static) -> Self {
        self.dl_dn = Some(Box::new(f));
        self
    }

    pub fn mass_matrix(mut self, f: impl Fn(&Phase) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        self.mass_matrix = Some(Box::new(f));
        self
    }

    pub fn friction(mut self, f: impl Fn(&Phase) -> DVector<f64> + Send + Sync + 'static) -> Self {
        self.friction = Some(Box::new(f));
        self
    }

    pub fn external_force(mut self, f: impl Fn(&Phase) -> DVector<f64> + Send + Sync + 'static) -> Self {
        self.external_force = Some(Box::new(f));
        self
    }

    /// `m` constraint rows `ω(q)`.
    pub fn constraints(
        mut self,
        m: usize,
        forms: impl Fn(&Phase) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        self.m = m;
        self.constraint_forms = Some(Box::new(forms));
        self
    }

    /// Analytic `d/dt ω(q(t))`; finite-differenced when absent.
    pub fn constraint_rate(mut self, f: impl Fn(&Phase) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        self.constraint_rate = Some(Box::new(f));
        self
    }

    pub fn temperature_floor(mut self, floor: f64) -> Self {
        self.temperature_floor = floor;
        self
    }

    /// Builds the model after checking its derivative hooks at `probe`.
    pub fn build(self, probe: &Phase) -> Result<CustomModel> {
        let model = self.build_unchecked()?;
        register_check(&model, probe)?;
        Ok(model)
    }

    /// Builds the model without the derivative check.
    pub fn build_unchecked(self) -> Result<CustomModel> {
        fn need<T>(slot: Option<T>, name: &str) -> Result<T> {
            slot.ok_or_else(|| Error::InvalidInput(format!("custom model is missing `{name}`")))
        }
        if self.n == 0 {
            return Err(Error::param("n", "must be at least 1"));
        }
        if self.m > 0 && self.m >= self.n {
            return Err(Error::param("m", "must be smaller than n"));
        }
        Ok(CustomModel {
            n: self.n,
            m: self.m,
            lagrangian: need(self.lagrangian, "lagrangian")?,
            dl_dq: need(self.dl_dq, "dl_dq")?,
            dl_dv: need(self.dl_dv, "dl_dv")?,
            dl_ds: need(self.dl_ds, "dl_ds")?,
            dl_dn: self.dl_dn,
            mass_matrix: need(self.mass_matrix, "mass_matrix")?,
            friction: self.friction,
            external_force: self.external_force,
            constraint_forms: self.constraint_forms,
            constraint_rate: self.constraint_rate,
            temperature_floor: self.temperature_floor,
        })
    }
}

impl ThermoModel for CustomModel {
    fn dof(&self) -> usize {
        self.n
    }

    fn constraint_count(&self) -> usize {
        self.m
    }

    fn lagrangian(&self, x: &Phase) -> f64 {
        (self.lagrangian)(x)
    }

    fn dl_dq(&self, x: &Phase) -> DVector<f64> {
        (self.dl_dq)(x)
    }

    fn dl_dv(&self, x: &Phase) -> DVector<f64> {
        (self.dl_dv)(x)
    }

    fn dl_ds(&self, x: &Phase) -> f64 {
        (self.dl_ds)(x)
    }

    fn dl_dn(&self, x: &Phase) -> f64 {
        self.dl_dn.as_ref().map_or(0.0, |f| f(x))
    }

    fn mass_matrix(&self, x: &Phase) -> DMatrix<f64> {
        (self.mass_matrix)(x)
    }

    fn friction(&self, x: &Phase) -> DVector<f64> {
        match &self.friction {
            Some(f) => f(x),
            None => DVector::zeros(self.n),
        }
    }

    fn external_force(&self, x: &Phase) -> DVector<f64> {
        match &self.external_force {
            Some(f) => f(x),
            None => DVector::zeros(self.n),
        }
    }

    fn constraint_forms(&self, x: &Phase) -> DMatrix<f64> {
        match &self.constraint_forms {
            Some(f) => f(x),
            None => DMatrix::zeros(0, self.n),
        }
    }

    fn constraint_rate(&self, x: &Phase) -> DMatrix<f64> {
        match &self.constraint_rate {
            Some(f) => f(x),
            None => super::fd_constraint_rate(self, x),
        }
    }

    fn temperature_floor(&self) -> f64 {
        self.temperature_floor
    }
}
