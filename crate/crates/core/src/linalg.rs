//! Pointwise linear algebra of Dirac structures.
//!
//! Everything here works on a single fiber: a vector space `V = ℝᴺ`, its dual
//! (identified with `ℝᴺ` through the coordinate basis) and the direct sum
//! `V ⊕ V*`, whose elements are stored as `2N`-vectors `(v, α)` with the vector
//! part first.
//!
//! Rank decisions are made by thresholding singular values at
//! [`RANK_RTOL`] times the largest singular value, and every [`Subspace`]
//! carries an orthonormal basis, so membership tests reduce to projections.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative singular-value threshold used for every rank decision.
pub const RANK_RTOL: f64 = 1e-10;

/// Absolute threshold below which a matrix is treated as exactly zero.
const ZERO_ATOL: f64 = 1e-300;

/// Thin singular value decomposition `A = U diag(σ) Vᵀ` with `V` square.
///
/// Computed by one-sided Jacobi rotations, which stay accurate on exactly
/// rank-deficient inputs. Singular values are sorted largest first; columns of
/// `u` belonging to zero singular values are zero.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub sigma: Vec<f64>,
    pub v: DMatrix<f64>,
}

const JACOBI_MAX_SWEEPS: usize = 80;

pub fn svd(a: &DMatrix<f64>) -> Svd {
    let (rows, cols) = a.shape();
    let mut w = a.clone();
    let mut v = DMatrix::<f64>::identity(cols, cols);
    let tol = (rows.max(1) as f64) * f64::EPSILON;
    let negligible = (f64::EPSILON * a.norm()).powi(2);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dot(&w.column(q));
                if alpha <= negligible
                    || beta <= negligible
                    || gamma.abs() <= tol * (alpha * beta).sqrt()
                {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for m in [&mut w, &mut v] {
                    for i in 0..m.nrows() {
                        let (xp, xq) = (m[(i, p)], m[(i, q)]);
                        m[(i, p)] = c * xp - s * xq;
                        m[(i, q)] = s * xp + c * xq;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..cols).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let mut u = DMatrix::zeros(rows, cols);
    let mut vs = DMatrix::zeros(cols, cols);
    let mut sigma = Vec::with_capacity(cols);
    for (k, &j) in order.iter().enumerate() {
        let s = norms[j];
        if s > ZERO_ATOL {
            u.set_column(k, &(w.column(j) / s));
        }
        vs.set_column(k, &v.column(j));
        sigma.push(s);
    }
    Svd { u, sigma, v: vs }
}

impl Svd {
    /// Number of singular values above `RANK_RTOL` times the largest.
    pub fn rank(&self) -> usize {
        match self.sigma.first() {
            Some(&max) if max > ZERO_ATOL => {
                self.sigma.iter().filter(|&&s| s > RANK_RTOL * max).count()
            }
            _ => 0,
        }
    }

    /// Minimum-norm least-squares solution of `A x = b`, discarding singular
    /// values at or below `rtol` times the largest.
    pub fn solve(&self, b: &DVector<f64>, rtol: f64) -> DVector<f64> {
        let max = self.sigma.first().copied().unwrap_or(0.0);
        let mut x = DVector::zeros(self.v.nrows());
        for (k, &s) in self.sigma.iter().enumerate() {
            if s > rtol * max && s > ZERO_ATOL {
                let coeff = self.u.column(k).dot(b) / s;
                x += self.v.column(k) * coeff;
            }
        }
        x
    }
}

/// Singular values of `a`, largest first. Empty for degenerate shapes.
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut sv = if a.nrows() < a.ncols() {
        svd(&a.transpose()).sigma
    } else {
        svd(a).sigma
    };
    sv.truncate(a.nrows().min(a.ncols()));
    sv
}

/// Numerical rank with the relative threshold [`RANK_RTOL`].
pub fn numerical_rank(a: &DMatrix<f64>) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    svd(a).rank()
}

/// Orthonormal basis of the column space of `a` (possibly with zero columns).
pub fn column_basis(a: &DMatrix<f64>) -> DMatrix<f64> {
    let rows = a.nrows();
    if a.ncols() == 0 || rows == 0 {
        return DMatrix::zeros(rows, 0);
    }
    let d = svd(a);
    d.u.columns(0, d.rank()).into_owned()
}

/// Orthonormal basis of the Euclidean orthogonal complement of the span of the
/// orthonormal columns of `q` inside `ℝ^dim`.
fn euclidean_complement(q: &DMatrix<f64>, dim: usize) -> DMatrix<f64> {
    let k = q.ncols();
    if k == 0 {
        return DMatrix::identity(dim, dim);
    }
    if k >= dim {
        return DMatrix::zeros(dim, 0);
    }
    let projector = DMatrix::identity(dim, dim) - q * q.transpose();
    // Eigenvalues are 1 (multiplicity dim-k) and 0 (k).
    let eig = SymmetricEigen::new(projector);
    let keep: Vec<usize> = (0..dim).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
    let mut basis = DMatrix::zeros(dim, keep.len());
    for (j, &i) in keep.iter().enumerate() {
        basis.set_column(j, &eig.eigenvectors.column(i));
    }
    basis
}

/// Orthonormal basis of `{x : a x = 0}`.
pub fn null_space(a: &DMatrix<f64>) -> DMatrix<f64> {
    let cols = a.ncols();
    if a.nrows() == 0 {
        return DMatrix::identity(cols, cols);
    }
    let d = svd(a);
    let r = d.rank();
    d.v.columns(r, cols - r).into_owned()
}

/// `rank([A|B]) = rank(A) = rank(B)`.
pub fn same_column_space(a: &DMatrix<f64>, b: &DMatrix<f64>) -> bool {
    if a.nrows() != b.nrows() {
        return false;
    }
    let ra = numerical_rank(a);
    let rb = numerical_rank(b);
    if ra != rb {
        return false;
    }
    let mut joined = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    joined.columns_mut(0, a.ncols()).copy_from(a);
    joined.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    numerical_rank(&joined) == ra
}

/// A linear subspace of `ℝ^ambient`, stored through an orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: DMatrix<f64>,
}

impl Subspace {
    /// Subspace spanned by the columns of `vectors`; dependent columns are allowed.
    pub fn span(vectors: &DMatrix<f64>) -> Result<Self> {
        if vectors.nrows() == 0 {
            return Err(Error::InvalidInput("ambient dimension must be positive".into()));
        }
        if vectors.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("spanning set contains non-finite entries".into()));
        }
        Ok(Self {
            basis: column_basis(vectors),
        })
    }

    /// Subspace with the given basis, which must be linearly independent.
    pub fn from_basis(basis: &DMatrix<f64>) -> Result<Self> {
        let s = Self::span(basis)?;
        if s.dim() != basis.ncols() {
            return Err(Error::InvalidInput(format!(
                "basis columns are linearly dependent (rank {} < {})",
                s.dim(),
                basis.ncols()
            )));
        }
        Ok(s)
    }

    pub fn zero(ambient: usize) -> Self {
        Self {
            basis: DMatrix::zeros(ambient, 0),
        }
    }

    pub fn full(ambient: usize) -> Self {
        Self {
            basis: DMatrix::identity(ambient, ambient),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Orthonormal basis, one vector per column.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Euclidean distance from `x` to the subspace.
    pub fn distance(&self, x: &DVector<f64>) -> Result<f64> {
        if x.len() != self.ambient_dim() {
            return Err(Error::dim("Subspace::distance", self.ambient_dim(), x.len()));
        }
        if self.dim() == 0 {
            return Ok(x.norm());
        }
        let coeffs = self.basis.tr_mul(x);
        Ok((x - &self.basis * coeffs).norm())
    }

    /// Basis-independent equality of column spaces.
    pub fn same_as(&self, other: &Subspace) -> bool {
        same_column_space(&self.basis, &other.basis)
    }
}

/// `Δ° = {α : ⟨α, v⟩ = 0 ∀ v ∈ Δ}`, expressed in the dual coordinate basis.
pub fn annihilator(s: &Subspace) -> Subspace {
    Subspace {
        basis: euclidean_complement(&s.basis, s.ambient_dim()),
    }
}

/// The symmetric pairing `⟨α, v̄⟩ + ⟨ᾱ, v⟩` on `V ⊕ V*`.
pub fn symmetric_pairing(a: &DVector<f64>, b: &DVector<f64>) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::dim("symmetric_pairing", a.len(), b.len()));
    }
    if !a.len().is_multiple_of(2) {
        return Err(Error::InvalidInput(format!(
            "V ⊕ V* elements have even length, got {}",
            a.len()
        )));
    }
    let n = a.len() / 2;
    let (v, alpha) = (a.rows(0, n), a.rows(n, n));
    let (vb, alphab) = (b.rows(0, n), b.rows(n, n));
    Ok(alpha.dot(&vb) + alphab.dot(&v))
}

/// Gram matrix of the symmetric pairing on the columns of `basis`.
fn pairing_gram(basis: &DMatrix<f64>) -> DMatrix<f64> {
    let n = basis.nrows() / 2;
    let top = basis.rows(0, n);
    let bottom = basis.rows(n, n);
    let cross = bottom.transpose() * top;
    &cross + cross.transpose()
}

/// `D^⊥` relative to the symmetric pairing.
pub fn orthogonal_complement(d: &Subspace) -> Result<Subspace> {
    let ambient = d.ambient_dim();
    if !ambient.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!(
            "orthogonal complement needs an even ambient dimension, got {ambient}"
        )));
    }
    let n = ambient / 2;
    // Rows of Bᵀ J, where J swaps the vector and covector halves.
    let mut swapped = DMatrix::zeros(ambient, d.dim());
    swapped.rows_mut(0, n).copy_from(&d.basis.rows(n, n));
    swapped.rows_mut(n, n).copy_from(&d.basis.rows(0, n));
    Ok(Subspace {
        basis: null_space(&swapped.transpose()),
    })
}

/// A constant antisymmetric bilinear form `Ω(v, w) = vᵀ Ω w` on `ℝᴺ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PresymplecticForm {
    matrix: DMatrix<f64>,
}

impl PresymplecticForm {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::InvalidInput("form matrix must be square and nonempty".into()));
        }
        let scale = matrix.amax().max(1.0);
        let asym = (&matrix + matrix.transpose()).amax();
        if asym > 1e-12 * scale {
            return Err(Error::InvalidInput(format!(
                "form matrix is not antisymmetric (|Ω + Ωᵀ| = {asym:e})"
            )));
        }
        Ok(Self { matrix })
    }

    /// Canonical form `Σ dqⁱ ∧ dpᵢ` on `ℝ²ⁿ` with coordinates `(q, p)`.
    pub fn canonical(n: usize) -> Self {
        let mut matrix = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            matrix[(i, n + i)] = 1.0;
            matrix[(n + i, i)] = -1.0;
        }
        Self { matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `Ω♭ v`, the covector `w ↦ Ω(v, w)`.
    pub fn flat(&self, v: &DVector<f64>) -> DVector<f64> {
        self.matrix.tr_mul(v)
    }
}

/// A subspace `D ⊂ V ⊕ V*` with `dim V = base_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearDiracDescriptor {
    base_dim: usize,
    elements: Subspace,
    certified: bool,
}

/// Outcome of [`certify_dirac`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiracCertificate {
    pub is_dirac: bool,
    pub dim_ok: bool,
    pub max_pairing: f64,
}

impl LinearDiracDescriptor {
    pub fn new(elements: Subspace) -> Result<Self> {
        let ambient = elements.ambient_dim();
        if !ambient.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!(
                "V ⊕ V* has even dimension, got {ambient}"
            )));
        }
        Ok(Self {
            base_dim: ambient / 2,
            elements,
            certified: false,
        })
    }

    /// Graph `{(v, Ω♭v)}` of a bilinear form given by its matrix.
    pub fn graph(matrix: &DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidInput("graph of a non-square map".into()));
        }
        let n = matrix.nrows();
        let mut basis = DMatrix::zeros(2 * n, n);
        basis.rows_mut(0, n).fill_with_identity();
        basis.rows_mut(n, n).copy_from(&matrix.transpose());
        Self::new(Subspace::span(&basis)?)
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn elements(&self) -> &Subspace {
        &self.elements
    }

    pub fn is_certified(&self) -> bool {
        self.certified
    }

    /// Runs [`certify_dirac`] and, on success, marks the descriptor certified.
    pub fn certify(mut self, tol: f64) -> Result<Self> {
        if certify_dirac(&self, tol).is_dirac {
            self.certified = true;
            Ok(self)
        } else {
            Err(Error::Uncertified)
        }
    }
}

/// `D` is Dirac iff `dim D = N` and the pairing vanishes on `D × D`.
pub fn certify_dirac(d: &LinearDiracDescriptor, tol: f64) -> DiracCertificate {
    let dim_ok = d.elements.dim() == d.base_dim;
    let max_pairing = if d.elements.dim() == 0 {
        0.0
    } else {
        pairing_gram(d.elements.basis()).amax()
    };
    DiracCertificate {
        is_dirac: dim_ok && max_pairing <= tol,
        dim_ok,
        max_pairing,
    }
}

/// `D = {(v, α) : v ∈ Δ, α − Ω♭v ∈ Δ°}`.
pub fn induced_dirac(delta: &Subspace, omega: &PresymplecticForm) -> Result<LinearDiracDescriptor> {
    let n = delta.ambient_dim();
    if omega.dim() != n {
        return Err(Error::dim("induced_dirac", n, omega.dim()));
    }
    let k = delta.dim();
    let ann = annihilator(delta);
    let mut basis = DMatrix::zeros(2 * n, n);
    for (j, v) in delta.basis().column_iter().enumerate() {
        let v = v.into_owned();
        basis.view_mut((0, j), (n, 1)).copy_from(&v);
        basis.view_mut((n, j), (n, 1)).copy_from(&omega.flat(&v));
    }
    for (j, eta) in ann.basis().column_iter().enumerate() {
        basis.view_mut((n, k + j), (n, 1)).copy_from(&eta);
    }
    let mut d = LinearDiracDescriptor::new(Subspace::span(&basis)?)?;
    d.certified = certify_dirac(&d, 1e-10).is_dirac;
    Ok(d)
}

/// Euclidean distance from `candidate` to `D`; zero exactly on members.
pub fn membership_residual(d: &LinearDiracDescriptor, candidate: &DVector<f64>) -> Result<f64> {
    if !d.certified {
        return Err(Error::Uncertified);
    }
    d.elements.distance(candidate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dvector;

    fn cols(n: usize, vs: &[&[f64]]) -> DMatrix<f64> {
        DMatrix::from_fn(n, vs.len(), |i, j| vs[j][i])
    }

    #[test]
    fn pairing_examples() {
        let zero = DVector::zeros(4);
        let any = dvector![1.0, -2.0, 3.0, 4.5];
        assert_eq!(symmetric_pairing(&zero, &any).unwrap(), 0.0);

        let a = dvector![1.0, 0.0, 0.0, 0.0];
        let b = dvector![0.0, 0.0, 1.0, 0.0];
        assert_eq!(symmetric_pairing(&a, &b).unwrap(), 1.0);

        // 3·5 + 7·2
        let a = dvector![2.0, 3.0];
        let b = dvector![5.0, 7.0];
        assert_eq!(symmetric_pairing(&a, &b).unwrap(), 29.0);
    }

    #[test]
    fn pairing_rejects_mismatched_dims() {
        let a = DVector::zeros(4);
        let b = DVector::zeros(2);
        assert!(matches!(symmetric_pairing(&a, &b), Err(Error::Dimension { .. })));
        let odd = DVector::zeros(3);
        assert!(symmetric_pairing(&odd, &odd).is_err());
    }

    #[test]
    fn annihilator_examples() {
        let s = Subspace::span(&cols(2, &[&[1.0, 0.0]])).unwrap();
        let ann = annihilator(&s);
        let expect = Subspace::span(&cols(2, &[&[0.0, 1.0]])).unwrap();
        assert!(ann.same_as(&expect));

        let ann = annihilator(&Subspace::full(3));
        assert_eq!(ann.dim(), 0);

        let s = Subspace::span(&cols(2, &[&[1.0, 1.0]])).unwrap();
        let ann = annihilator(&s);
        let expect = Subspace::span(&cols(2, &[&[1.0, -1.0]])).unwrap();
        assert!(ann.same_as(&expect));
    }

    #[test]
    fn complement_examples() {
        let full = orthogonal_complement(&Subspace::zero(4)).unwrap();
        assert_eq!(full.dim(), 4);

        // pairing((1,0),(v,α)) = α, so the complement is {(v, 0)}.
        let d = Subspace::span(&cols(2, &[&[1.0, 0.0]])).unwrap();
        let perp = orthogonal_complement(&d).unwrap();
        assert!(perp.same_as(&d));

        let graph = LinearDiracDescriptor::graph(PresymplecticForm::canonical(1).matrix()).unwrap();
        let perp = orthogonal_complement(graph.elements()).unwrap();
        assert!(perp.same_as(graph.elements()));

        assert!(orthogonal_complement(&Subspace::zero(3)).is_err());
    }

    #[test]
    fn certification_examples() {
        let canonical = PresymplecticForm::canonical(1);
        let graph = LinearDiracDescriptor::graph(canonical.matrix()).unwrap();
        let cert = certify_dirac(&graph, 1e-12);
        assert!(cert.is_dirac && cert.dim_ok);

        let identity = LinearDiracDescriptor::graph(&DMatrix::identity(2, 2)).unwrap();
        let cert = certify_dirac(&identity, 1e-12);
        assert!(cert.dim_ok);
        assert!(!cert.is_dirac);
        // orthonormal basis (e_i, e_i)/√2 pairs to 2·½ = 1 with itself
        assert_relative_eq!(cert.max_pairing, 1.0, epsilon = 1e-12);

        let delta = Subspace::span(&cols(2, &[&[1.0, 0.0]])).unwrap();
        let d = induced_dirac(&delta, &canonical).unwrap();
        assert!(certify_dirac(&d, 1e-10).is_dirac);
        assert!(d.is_certified());
    }

    #[test]
    fn induced_full_and_zero_distributions() {
        let omega = PresymplecticForm::canonical(2);
        let d = induced_dirac(&Subspace::full(4), &omega).unwrap();
        let graph = LinearDiracDescriptor::graph(omega.matrix()).unwrap();
        assert!(d.elements().same_as(graph.elements()));

        let d = induced_dirac(&Subspace::zero(4), &omega).unwrap();
        let mut vertical = DMatrix::zeros(8, 4);
        vertical.rows_mut(4, 4).fill_with_identity();
        assert!(d.elements().same_as(&Subspace::span(&vertical).unwrap()));
        assert_eq!(d.elements().dim(), 4);
    }

    #[test]
    fn induced_matches_local_cotangent_expression() {
        // V = T(T*ℝ²) with coordinates (q1, q2, p1, p2), Δ_Q = span{∂q1} lifted.
        let lifted = cols(
            4,
            &[&[1.0, 0.0, 0.0, 0.0], &[0.0, 0.0, 1.0, 0.0], &[0.0, 0.0, 0.0, 1.0]],
        );
        let delta = Subspace::span(&lifted).unwrap();
        let d = induced_dirac(&delta, &PresymplecticForm::canonical(2)).unwrap();

        // Element ((q̇, ṗ), (α, u)); conditions q̇₂ = 0, u = q̇, (α + ṗ)₁ = 0.
        let mut conditions = DMatrix::zeros(4, 8);
        conditions[(0, 1)] = 1.0;
        conditions[(1, 0)] = 1.0;
        conditions[(1, 6)] = -1.0;
        conditions[(2, 1)] = 1.0;
        conditions[(2, 7)] = -1.0;
        conditions[(3, 4)] = 1.0;
        conditions[(3, 2)] = 1.0;
        let local = null_space(&conditions);
        assert_eq!(local.ncols(), 4);
        assert!(same_column_space(d.elements().basis(), &local));
    }

    #[test]
    fn membership_examples() {
        let omega = PresymplecticForm::canonical(1);
        let d = LinearDiracDescriptor::graph(omega.matrix())
            .unwrap()
            .certify(1e-12)
            .unwrap();
        for c in d.elements().basis().column_iter() {
            assert!(membership_residual(&d, &c.into_owned()).unwrap() <= 1e-12);
        }
        assert_eq!(membership_residual(&d, &DVector::zeros(4)).unwrap(), 0.0);

        // Least-squares oracle: residual of projecting onto the raw (non-orthonormal) basis.
        let raw = cols(4, &[&[1.0, 0.0, 0.0, 1.0], &[0.0, 1.0, -1.0, 0.0]]);
        let c = dvector![1.0, 0.0, 0.0, 0.0];
        let normal = raw.tr_mul(&raw);
        let coeffs = normal.lu().solve(&raw.tr_mul(&c)).unwrap();
        let oracle = (&c - &raw * coeffs).norm();
        assert_relative_eq!(oracle, 1.0 / 2f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(membership_residual(&d, &c).unwrap(), oracle, epsilon = 1e-12);
    }

    #[test]
    fn membership_requires_certification() {
        let d = LinearDiracDescriptor::graph(&DMatrix::identity(2, 2)).unwrap();
        assert_eq!(
            membership_residual(&d, &DVector::zeros(4)),
            Err(Error::Uncertified)
        );
        assert!(d.certify(1e-10).is_err());
    }

    #[test]
    fn from_basis_rejects_dependent_columns() {
        let dependent = cols(3, &[&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]]);
        assert!(Subspace::from_basis(&dependent).is_err());
        assert_eq!(Subspace::span(&dependent).unwrap().dim(), 1);
    }

    #[test]
    fn form_rejects_symmetric_matrix() {
        assert!(PresymplecticForm::new(DMatrix::identity(2, 2)).is_err());
    }
    #[test]
    fn svd_handles_exact_rank_deficiency() {
        let a = DMatrix::from_row_slice(
            5,
            2,
            &[-1.0, -2.0, 2.0, 4.0, 2.0, 4.0, 2.0, 4.0, -1.0, -2.0],
        );
        let d = svd(&a);
        assert_eq!(d.rank(), 1);
        let sigma = DMatrix::from_diagonal(&DVector::from_vec(d.sigma.clone()));
        let rebuilt = d.u.columns(0, 2) * sigma * d.v.transpose();
        assert!((rebuilt - &a).amax() < 1e-14);
        let kernel = null_space(&a);
        assert_eq!(kernel.ncols(), 1);
        assert!((&a * &kernel).amax() < 1e-14);
        assert_relative_eq!(d.sigma[0], 70f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn svd_solve_is_minimum_norm() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let x = svd(&a).solve(&dvector![2.0], 1e-14);
        assert_relative_eq!(x[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(x[1], 1.0, epsilon = 1e-14);
    }
}
