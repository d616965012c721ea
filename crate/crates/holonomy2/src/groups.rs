//! Matrix realizations of the Lie groups used by the built-in crossed modules.
//!
//! Every group element and algebra element is stored as a small complex matrix
//! (`DMatrix<Complex<f64>>`), tagged with the [`GroupKind`] that fixes its
//! shape, its membership constraints, and whether the group law is matrix
//! multiplication or addition.  Exponential and logarithm use closed forms
//! where they exist (unit complex numbers, quaternions, Rodrigues, terminating
//! nilpotent series) and scaling-and-squaring Padé otherwise.

use nalgebra::{Complex, DMatrix};
use rand::Rng;

use crate::error::{Error, Result};

pub type C = Complex<f64>;
pub type CMat = DMatrix<C>;

pub fn c(re: f64) -> C {
    Complex::new(re, 0.0)
}

pub fn ci(im: f64) -> C {
    Complex::new(0.0, im)
}

/// Validation tolerance for group/algebra membership constraints.
pub const MEMBERSHIP_TOL: f64 = 1e-10;

/// Angle guard for principal logarithms: rotations closer than this to the
/// cut locus (angle pi) are rejected rather than computed unstably.
const LOG_BRANCH_GUARD: f64 = 1e-6;

/// The matrix groups with built-in support.
///
/// `ImLine` (purely imaginary numbers) and `R2` are additive groups; their
/// "product" is matrix addition and their exponential is the identity map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroupKind {
    /// Unit complex numbers as 1x1 unitary matrices.
    U1,
    /// The additive group of purely imaginary numbers, 1x1.
    ImLine,
    /// 2x2 special unitary matrices.
    Su2,
    /// 3x3 real special orthogonal matrices.
    So3,
    /// 3x3 real unipotent upper-triangular matrices (Heisenberg group).
    Heis,
    /// The additive plane, stored as real 2x1 columns.
    R2,
    /// Automorphisms of the Heisenberg group, as 3x3 real matrices acting on
    /// Lie-algebra coordinates (X, Y, Z): block form [[A, 0], [w^T, det A]].
    HeisAut,
}

impl GroupKind {
    /// Matrix storage shape (rows, cols).
    pub fn shape(self) -> (usize, usize) {
        match self {
            GroupKind::U1 | GroupKind::ImLine => (1, 1),
            GroupKind::Su2 => (2, 2),
            GroupKind::So3 | GroupKind::Heis | GroupKind::HeisAut => (3, 3),
            GroupKind::R2 => (2, 1),
        }
    }

    /// True for groups whose law is matrix addition.
    pub fn is_additive(self) -> bool {
        matches!(self, GroupKind::ImLine | GroupKind::R2)
    }

    /// Dimension of the Lie algebra, used by random sampling.
    pub fn algebra_dim(self) -> usize {
        match self {
            GroupKind::U1 | GroupKind::ImLine => 1,
            GroupKind::R2 => 2,
            GroupKind::Su2 | GroupKind::So3 | GroupKind::Heis => 3,
            GroupKind::HeisAut => 6,
        }
    }
}

fn check_shape(kind: GroupKind, mat: &CMat) -> Result<()> {
    let (r, k) = kind.shape();
    if mat.nrows() != r || mat.ncols() != k {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", r, k),
            got: format!("{}x{}", mat.nrows(), mat.ncols()),
        });
    }
    Ok(())
}

fn imag_norm(mat: &CMat) -> f64 {
    mat.iter().map(|z| z.im * z.im).sum::<f64>().sqrt()
}

/// An element of one of the built-in groups.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    kind: GroupKind,
    mat: CMat,
}

/// An element of the Lie algebra of one of the built-in groups.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement {
    kind: GroupKind,
    mat: CMat,
}

impl GroupElement {
    /// Wraps a matrix without validating membership; shape is still checked.
    pub fn from_matrix(kind: GroupKind, mat: CMat) -> Result<Self> {
        check_shape(kind, &mat)?;
        Ok(GroupElement { kind, mat })
    }

    /// Wraps a matrix and validates the group membership constraints.
    pub fn new(kind: GroupKind, mat: CMat) -> Result<Self> {
        let g = Self::from_matrix(kind, mat)?;
        g.validate(MEMBERSHIP_TOL)?;
        Ok(g)
    }

    pub fn identity(kind: GroupKind) -> Self {
        let (r, k) = kind.shape();
        let mat = if kind.is_additive() {
            CMat::zeros(r, k)
        } else {
            CMat::identity(r, k)
        };
        GroupElement { kind, mat }
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    /// Group product (matrix product, or addition for the additive kinds).
    pub fn mul(&self, other: &GroupElement) -> Result<GroupElement> {
        if self.kind != other.kind {
            return Err(Error::KindMismatch {
                expected: self.kind,
                got: other.kind,
            });
        }
        let mat = if self.kind.is_additive() {
            &self.mat + &other.mat
        } else {
            &self.mat * &other.mat
        };
        Ok(GroupElement {
            kind: self.kind,
            mat,
        })
    }

    pub fn inverse(&self) -> GroupElement {
        let mat = match self.kind {
            GroupKind::ImLine | GroupKind::R2 => -&self.mat,
            GroupKind::U1 => {
                let z = self.mat[(0, 0)];
                CMat::from_element(1, 1, z.conj() / z.norm_sqr().max(f64::MIN_POSITIVE))
            }
            GroupKind::Su2 => self.mat.adjoint(),
            GroupKind::So3 => self.mat.transpose(),
            GroupKind::Heis => {
                // (I + N)^-1 = I - N + N^2 for strictly upper-triangular N.
                let n = &self.mat - CMat::identity(3, 3);
                CMat::identity(3, 3) - &n + &n * &n
            }
            GroupKind::HeisAut => self
                .mat
                .clone()
                .try_inverse()
                .expect("valid HeisAut elements are invertible"),
        };
        GroupElement {
            kind: self.kind,
            mat,
        }
    }

    /// g h g^-1 (just h in the additive groups).
    pub fn conjugate(&self, h: &GroupElement) -> Result<GroupElement> {
        if self.kind.is_additive() {
            if self.kind != h.kind {
                return Err(Error::KindMismatch {
                    expected: self.kind,
                    got: h.kind,
                });
            }
            return Ok(h.clone());
        }
        self.mul(h)?.mul(&self.inverse())
    }

    /// Frobenius distance between the stored matrices.
    pub fn distance(&self, other: &GroupElement) -> f64 {
        (&self.mat - &other.mat).norm()
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        self.distance(&GroupElement::identity(self.kind)) <= tol
    }

    /// Residual of the membership constraints (0 for an exact element).
    pub fn membership_residual(&self) -> f64 {
        match self.kind {
            GroupKind::U1 => (self.mat[(0, 0)].norm() - 1.0).abs(),
            GroupKind::ImLine => self.mat[(0, 0)].re.abs(),
            GroupKind::Su2 => {
                let gram = self.mat.adjoint() * &self.mat - CMat::identity(2, 2);
                let det = self.mat[(0, 0)] * self.mat[(1, 1)] - self.mat[(0, 1)] * self.mat[(1, 0)];
                gram.norm() + (det - c(1.0)).norm()
            }
            GroupKind::So3 => {
                let gram = self.mat.transpose() * &self.mat - CMat::identity(3, 3);
                let det = det3(&self.mat);
                gram.norm() + (det - c(1.0)).norm() + imag_norm(&self.mat)
            }
            GroupKind::Heis => {
                let mut resid = imag_norm(&self.mat);
                for i in 0..3 {
                    resid += (self.mat[(i, i)] - c(1.0)).norm();
                    for j in 0..i {
                        resid += self.mat[(i, j)].norm();
                    }
                }
                resid
            }
            GroupKind::R2 => imag_norm(&self.mat),
            GroupKind::HeisAut => {
                let m = &self.mat;
                let det_a = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
                m[(0, 2)].norm()
                    + m[(1, 2)].norm()
                    + (m[(2, 2)] - det_a).norm()
                    + imag_norm(m)
            }
        }
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let residual = self.membership_residual();
        if residual > tol {
            return Err(Error::NotInGroup {
                kind: self.kind,
                residual,
                tol,
            });
        }
        Ok(())
    }

    /// Projects the stored matrix back onto the group manifold.  Used by the
    /// integrators to remove accumulated constraint drift.
    pub fn project(&self) -> GroupElement {
        let mat = match self.kind {
            GroupKind::U1 => {
                let z = self.mat[(0, 0)];
                let n = z.norm();
                CMat::from_element(1, 1, if n > 0.0 { z / n } else { c(1.0) })
            }
            GroupKind::ImLine => CMat::from_element(1, 1, ci(self.mat[(0, 0)].im)),
            GroupKind::Su2 => {
                let q = normalize4(su2_to_quat(&self.mat));
                quat_to_su2(q)
            }
            GroupKind::So3 => {
                let q = normalize4(rotation_to_quat(&self.mat));
                quat_to_rotation(q)
            }
            GroupKind::Heis => {
                let (a, b, h) = heis_group_entries(self);
                heis_group(a, b, h).mat
            }
            GroupKind::R2 => {
                CMat::from_fn(2, 1, |i, _| c(self.mat[(i, 0)].re))
            }
            GroupKind::HeisAut => {
                let mut m = self.mat.map(|z| c(z.re));
                m[(0, 2)] = c(0.0);
                m[(1, 2)] = c(0.0);
                m[(2, 2)] = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
                m
            }
        };
        GroupElement {
            kind: self.kind,
            mat,
        }
    }

    /// Principal logarithm.  Fails near the cut locus (e.g. rotations by pi).
    pub fn log(&self) -> Result<AlgebraElement> {
        let kind = self.kind;
        let mat = match kind {
            GroupKind::ImLine | GroupKind::R2 => self.mat.clone(),
            GroupKind::U1 => {
                let z = self.mat[(0, 0)];
                let mut theta = z.arg();
                if theta <= -std::f64::consts::PI + f64::EPSILON {
                    theta = std::f64::consts::PI;
                }
                CMat::from_element(1, 1, ci(theta))
            }
            GroupKind::Su2 => {
                let w = 0.5 * (self.mat[(0, 0)].re + self.mat[(1, 1)].re);
                let v = &self.mat - CMat::identity(2, 2) * c(w);
                let s = det2(&v).re.max(0.0).sqrt();
                let theta = s.atan2(w);
                if std::f64::consts::PI - theta < LOG_BRANCH_GUARD {
                    return Err(Error::LogBranch {
                        kind,
                        detail: "rotation angle within guard band of pi".into(),
                    });
                }
                let scale = if s > 1e-6 {
                    theta / s
                } else {
                    // theta/sin(theta) ~ 1 + s^2/6 for small angles
                    1.0 + s * s / 6.0
                };
                v * c(scale)
            }
            GroupKind::So3 => {
                let tr = (self.mat[(0, 0)] + self.mat[(1, 1)] + self.mat[(2, 2)]).re;
                let cos_theta = ((tr - 1.0) / 2.0).clamp(-1.0, 1.0);
                let anti = (&self.mat - self.mat.transpose()) * c(0.5);
                let a = so3_to_vec(&AlgebraElement {
                    kind: GroupKind::So3,
                    mat: anti.clone(),
                });
                let sin_theta = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
                let theta = sin_theta.atan2(cos_theta);
                if std::f64::consts::PI - theta < LOG_BRANCH_GUARD {
                    return Err(Error::LogBranch {
                        kind,
                        detail: "rotation angle within guard band of pi".into(),
                    });
                }
                let scale = if sin_theta > 1e-6 {
                    theta / sin_theta
                } else {
                    1.0 + sin_theta * sin_theta / 6.0
                };
                anti * c(scale)
            }
            GroupKind::Heis => {
                let n = &self.mat - CMat::identity(3, 3);
                // log(I + N) = N - N^2/2; N^3 = 0.
                &n - (&n * &n) * c(0.5)
            }
            GroupKind::HeisAut => logm_generic(&self.mat).map_err(|detail| Error::LogBranch {
                kind,
                detail,
            })?,
        };
        Ok(AlgebraElement { kind, mat })
    }
}

impl AlgebraElement {
    pub fn from_matrix(kind: GroupKind, mat: CMat) -> Result<Self> {
        check_shape(kind, &mat)?;
        Ok(AlgebraElement { kind, mat })
    }

    pub fn new(kind: GroupKind, mat: CMat) -> Result<Self> {
        let a = Self::from_matrix(kind, mat)?;
        a.validate(MEMBERSHIP_TOL)?;
        Ok(a)
    }

    pub fn zero(kind: GroupKind) -> Self {
        let (r, k) = kind.shape();
        AlgebraElement {
            kind,
            mat: CMat::zeros(r, k),
        }
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn add(&self, other: &AlgebraElement) -> Result<AlgebraElement> {
        if self.kind != other.kind {
            return Err(Error::KindMismatch {
                expected: self.kind,
                got: other.kind,
            });
        }
        Ok(AlgebraElement {
            kind: self.kind,
            mat: &self.mat + &other.mat,
        })
    }

    pub fn sub(&self, other: &AlgebraElement) -> Result<AlgebraElement> {
        Ok(self.add(&other.scale(-1.0))?)
    }

    pub fn scale(&self, factor: f64) -> AlgebraElement {
        AlgebraElement {
            kind: self.kind,
            mat: &self.mat * c(factor),
        }
    }

    pub fn norm(&self) -> f64 {
        self.mat.norm()
    }

    pub fn distance(&self, other: &AlgebraElement) -> f64 {
        (&self.mat - &other.mat).norm()
    }

    /// Lie bracket.  Zero for the abelian additive kinds, the matrix
    /// commutator otherwise.
    pub fn bracket(&self, other: &AlgebraElement) -> Result<AlgebraElement> {
        if self.kind != other.kind {
            return Err(Error::KindMismatch {
                expected: self.kind,
                got: other.kind,
            });
        }
        if self.kind.is_additive() || self.kind == GroupKind::U1 {
            return Ok(AlgebraElement::zero(self.kind));
        }
        Ok(AlgebraElement {
            kind: self.kind,
            mat: &self.mat * &other.mat - &other.mat * &self.mat,
        })
    }

    pub fn membership_residual(&self) -> f64 {
        match self.kind {
            GroupKind::U1 | GroupKind::ImLine => self.mat[(0, 0)].re.abs(),
            GroupKind::Su2 => {
                let herm = &self.mat + self.mat.adjoint();
                let tr = self.mat[(0, 0)] + self.mat[(1, 1)];
                herm.norm() + tr.norm()
            }
            GroupKind::So3 => {
                let sym = &self.mat + self.mat.transpose();
                sym.norm() + imag_norm(&self.mat)
            }
            GroupKind::Heis => {
                let mut resid = imag_norm(&self.mat);
                for i in 0..3 {
                    for j in 0..=i {
                        resid += self.mat[(i, j)].norm();
                    }
                }
                resid
            }
            GroupKind::R2 => imag_norm(&self.mat),
            GroupKind::HeisAut => {
                let m = &self.mat;
                m[(0, 2)].norm()
                    + m[(1, 2)].norm()
                    + (m[(2, 2)] - m[(0, 0)] - m[(1, 1)]).norm()
                    + imag_norm(m)
            }
        }
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let residual = self.membership_residual();
        if residual > tol {
            return Err(Error::NotInGroup {
                kind: self.kind,
                residual,
                tol,
            });
        }
        Ok(())
    }

    /// Exponential map onto the group.
    pub fn exp(&self) -> GroupElement {
        let kind = self.kind;
        let mat = match kind {
            GroupKind::ImLine | GroupKind::R2 => self.mat.clone(),
            GroupKind::U1 => CMat::from_element(1, 1, self.mat[(0, 0)].exp()),
            GroupKind::Su2 => {
                // A^2 = -theta^2 I with theta = sqrt(det A) >= 0.
                let theta = det2(&self.mat).re.max(0.0).sqrt();
                let (cos_t, sinc_t) = cos_sinc(theta);
                CMat::identity(2, 2) * c(cos_t) + &self.mat * c(sinc_t)
            }
            GroupKind::So3 => {
                let a = so3_to_vec(self);
                let theta = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
                let (cos_t, sinc_t) = cos_sinc(theta);
                let versine = if theta > 1e-4 {
                    (1.0 - cos_t) / (theta * theta)
                } else {
                    0.5 - theta * theta / 24.0 + theta.powi(4) / 720.0
                };
                CMat::identity(3, 3)
                    + &self.mat * c(sinc_t)
                    + (&self.mat * &self.mat) * c(versine)
            }
            GroupKind::Heis => {
                CMat::identity(3, 3) + &self.mat + (&self.mat * &self.mat) * c(0.5)
            }
            GroupKind::HeisAut => expm_pade(&self.mat),
        };
        GroupElement { kind, mat }
    }
}

/// cos(theta) and sin(theta)/theta with a series branch near zero.
fn cos_sinc(theta: f64) -> (f64, f64) {
    if theta > 1e-4 {
        (theta.cos(), theta.sin() / theta)
    } else {
        let t2 = theta * theta;
        (1.0 - t2 / 2.0 + t2 * t2 / 24.0, 1.0 - t2 / 6.0 + t2 * t2 / 120.0)
    }
}

fn det2(m: &CMat) -> C {
    m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
}

fn det3(m: &CMat) -> C {
    m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
        - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
        + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)])
}

/// Scaling-and-squaring matrix exponential with a degree-6 Padé core.
pub fn expm_pade(a: &CMat) -> CMat {
    let n = a.nrows();
    let norm = a.norm();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a * c((0.5f64).powi(squarings as i32));
    // Degree-6 diagonal Padé coefficients.
    let coeffs = [
        1.0,
        0.5,
        5.0 / 44.0,
        1.0 / 66.0,
        1.0 / 792.0,
        1.0 / 15840.0,
        1.0 / 665280.0,
    ];
    let mut term = CMat::identity(n, n);
    let mut num = CMat::identity(n, n) * c(coeffs[0]);
    let mut den = CMat::identity(n, n) * c(coeffs[0]);
    for (k, &ck) in coeffs.iter().enumerate().skip(1) {
        term = &term * &scaled;
        num += &term * c(ck);
        if k % 2 == 0 {
            den += &term * c(ck);
        } else {
            den -= &term * c(ck);
        }
    }
    let mut result = den
        .try_inverse()
        .expect("Padé denominator is nonsingular for scaled inputs")
        * num;
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Truncated Taylor series for exp; reference oracle for the closed forms.
pub fn expm_reference(a: &CMat, terms: usize) -> CMat {
    let n = a.nrows();
    let mut sum = CMat::identity(n, n);
    let mut term = CMat::identity(n, n);
    for k in 1..=terms {
        term = (&term * a) * c(1.0 / k as f64);
        sum += &term;
    }
    sum
}

/// Principal matrix logarithm by inverse scaling-and-squaring: repeated
/// square roots (Denman–Beavers) until close to the identity, then a series.
fn logm_generic(m: &CMat) -> std::result::Result<CMat, String> {
    let n = m.nrows();
    let mut y = m.clone();
    let mut doublings = 0u32;
    while (&y - CMat::identity(n, n)).norm() > 0.3 {
        if doublings >= 40 {
            return Err("square-root iteration failed to contract".into());
        }
        y = sqrtm_db(&y).ok_or_else(|| "matrix square root failed".to_string())?;
        doublings += 1;
    }
    let e = &y - CMat::identity(n, n);
    let mut term = CMat::identity(n, n);
    let mut sum = CMat::zeros(n, n);
    for k in 1..=60 {
        term = &term * &e;
        let coeff = if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64;
        sum += &term * c(coeff);
        if term.norm() / (k as f64) < 1e-17 {
            break;
        }
    }
    let result = sum * c(2.0f64.powi(doublings as i32));
    // Round-trip guard: reject if exp(log m) does not reproduce m.
    let back = expm_pade(&result);
    if (&back - m).norm() > 1e-9 * m.norm().max(1.0) {
        return Err("outside the reliable principal-log domain".into());
    }
    Ok(result)
}

/// Denman–Beavers iteration for the principal matrix square root.
fn sqrtm_db(m: &CMat) -> Option<CMat> {
    let n = m.nrows();
    let mut y = m.clone();
    let mut z = CMat::identity(n, n);
    for _ in 0..60 {
        let y_inv = y.clone().try_inverse()?;
        let z_inv = z.clone().try_inverse()?;
        let y_next = (&y + &z_inv) * c(0.5);
        let z_next = (&z + &y_inv) * c(0.5);
        let delta = (&y_next - &y).norm();
        y = y_next;
        z = z_next;
        if delta < 1e-15 {
            break;
        }
    }
    Some(y)
}

/// Maurer–Cartan form: g^-1 dg for multiplicative groups, dg for additive.
pub fn maurer_cartan(g: &GroupElement, dg: &CMat) -> Result<AlgebraElement> {
    check_shape(g.kind, dg)?;
    let mat = if g.kind.is_additive() {
        dg.clone()
    } else {
        g.inverse().mat * dg
    };
    Ok(AlgebraElement {
        kind: g.kind,
        mat,
    })
}

// ---------------------------------------------------------------------------
// so(3) and su(2) coordinate helpers
// ---------------------------------------------------------------------------

/// Basis L_k of so(3) with [L1, L2] = L3 (cyclic).
pub fn so3_from_vec(a: [f64; 3]) -> AlgebraElement {
    let mut m = CMat::zeros(3, 3);
    m[(0, 1)] = c(-a[2]);
    m[(1, 0)] = c(a[2]);
    m[(0, 2)] = c(a[1]);
    m[(2, 0)] = c(-a[1]);
    m[(1, 2)] = c(-a[0]);
    m[(2, 1)] = c(a[0]);
    AlgebraElement {
        kind: GroupKind::So3,
        mat: m,
    }
}

pub fn so3_to_vec(a: &AlgebraElement) -> [f64; 3] {
    [
        a.mat[(2, 1)].re,
        a.mat[(0, 2)].re,
        a.mat[(1, 0)].re,
    ]
}

/// Basis e_k = -(i/2) sigma_k of su(2) with [e1, e2] = e3 (cyclic).
pub fn su2_from_vec(a: [f64; 3]) -> AlgebraElement {
    let mut m = CMat::zeros(2, 2);
    m[(0, 0)] = ci(-0.5 * a[2]);
    m[(1, 1)] = ci(0.5 * a[2]);
    m[(0, 1)] = C::new(-0.5 * a[1], -0.5 * a[0]);
    m[(1, 0)] = C::new(0.5 * a[1], -0.5 * a[0]);
    AlgebraElement {
        kind: GroupKind::Su2,
        mat: m,
    }
}

pub fn su2_to_vec(a: &AlgebraElement) -> [f64; 3] {
    [
        -2.0 * a.mat[(0, 1)].im,
        -2.0 * a.mat[(0, 1)].re,
        -2.0 * a.mat[(0, 0)].im,
    ]
}

/// SU(2) element from a unit quaternion (w, x, y, z).
pub fn quat_to_su2(q: [f64; 4]) -> CMat {
    let [w, x, y, z] = q;
    let mut m = CMat::zeros(2, 2);
    m[(0, 0)] = C::new(w, -z);
    m[(0, 1)] = C::new(-y, -x);
    m[(1, 0)] = C::new(y, -x);
    m[(1, 1)] = C::new(w, z);
    m
}

pub fn su2_to_quat(m: &CMat) -> [f64; 4] {
    [
        0.5 * (m[(0, 0)].re + m[(1, 1)].re),
        -0.5 * (m[(0, 1)].im + m[(1, 0)].im),
        0.5 * (m[(1, 0)].re - m[(0, 1)].re),
        0.5 * (m[(1, 1)].im - m[(0, 0)].im),
    ]
}

/// Rotation matrix of a unit quaternion.
pub fn quat_to_rotation(q: [f64; 4]) -> CMat {
    let [w, x, y, z] = q;
    let mut m = CMat::zeros(3, 3);
    m[(0, 0)] = c(1.0 - 2.0 * (y * y + z * z));
    m[(0, 1)] = c(2.0 * (x * y - w * z));
    m[(0, 2)] = c(2.0 * (x * z + w * y));
    m[(1, 0)] = c(2.0 * (x * y + w * z));
    m[(1, 1)] = c(1.0 - 2.0 * (x * x + z * z));
    m[(1, 2)] = c(2.0 * (y * z - w * x));
    m[(2, 0)] = c(2.0 * (x * z - w * y));
    m[(2, 1)] = c(2.0 * (y * z + w * x));
    m[(2, 2)] = c(1.0 - 2.0 * (x * x + y * y));
    m
}

/// Quaternion lift of a rotation matrix, via the numerically stable
/// largest-component branch.  The overall sign is not determined (both lifts
/// induce the same conjugation action).
pub fn rotation_to_quat(m: &CMat) -> [f64; 4] {
    let r = |i: usize, j: usize| m[(i, j)].re;
    let tr = r(0, 0) + r(1, 1) + r(2, 2);
    if tr > 0.0 {
        let s = (tr + 1.0).sqrt() * 2.0;
        [
            0.25 * s,
            (r(2, 1) - r(1, 2)) / s,
            (r(0, 2) - r(2, 0)) / s,
            (r(1, 0) - r(0, 1)) / s,
        ]
    } else if r(0, 0) > r(1, 1) && r(0, 0) > r(2, 2) {
        let s = (1.0 + r(0, 0) - r(1, 1) - r(2, 2)).sqrt() * 2.0;
        [
            (r(2, 1) - r(1, 2)) / s,
            0.25 * s,
            (r(0, 1) + r(1, 0)) / s,
            (r(0, 2) + r(2, 0)) / s,
        ]
    } else if r(1, 1) > r(2, 2) {
        let s = (1.0 + r(1, 1) - r(0, 0) - r(2, 2)).sqrt() * 2.0;
        [
            (r(0, 2) - r(2, 0)) / s,
            (r(0, 1) + r(1, 0)) / s,
            0.25 * s,
            (r(1, 2) + r(2, 1)) / s,
        ]
    } else {
        let s = (1.0 + r(2, 2) - r(0, 0) - r(1, 1)).sqrt() * 2.0;
        [
            (r(1, 0) - r(0, 1)) / s,
            (r(0, 2) + r(2, 0)) / s,
            (r(1, 2) + r(2, 1)) / s,
            0.25 * s,
        ]
    }
}

fn normalize4(q: [f64; 4]) -> [f64; 4] {
    let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
    [q[0] / n, q[1] / n, q[2] / n, q[3] / n]
}

// ---------------------------------------------------------------------------
// Heisenberg coordinate helpers
// ---------------------------------------------------------------------------

/// Unipotent matrix with entries a at (1,2), b at (1,3), h at (2,3)
/// (1-based positions).
pub fn heis_group(a: f64, b: f64, h: f64) -> GroupElement {
    let mut m = CMat::identity(3, 3);
    m[(0, 1)] = c(a);
    m[(0, 2)] = c(b);
    m[(1, 2)] = c(h);
    GroupElement {
        kind: GroupKind::Heis,
        mat: m,
    }
}

pub fn heis_group_entries(g: &GroupElement) -> (f64, f64, f64) {
    (
        g.mat[(0, 1)].re,
        g.mat[(0, 2)].re,
        g.mat[(1, 2)].re,
    )
}

/// Strictly upper-triangular algebra element with the same entry layout.
pub fn heis_alg(a: f64, b: f64, h: f64) -> AlgebraElement {
    let mut m = CMat::zeros(3, 3);
    m[(0, 1)] = c(a);
    m[(0, 2)] = c(b);
    m[(1, 2)] = c(h);
    AlgebraElement {
        kind: GroupKind::Heis,
        mat: m,
    }
}

pub fn heis_alg_entries(x: &AlgebraElement) -> (f64, f64, f64) {
    (
        x.mat[(0, 1)].re,
        x.mat[(0, 2)].re,
        x.mat[(1, 2)].re,
    )
}

pub fn r2_group(u: f64, v: f64) -> GroupElement {
    let mut m = CMat::zeros(2, 1);
    m[(0, 0)] = c(u);
    m[(1, 0)] = c(v);
    GroupElement {
        kind: GroupKind::R2,
        mat: m,
    }
}

pub fn r2_alg(u: f64, v: f64) -> AlgebraElement {
    let g = r2_group(u, v);
    AlgebraElement {
        kind: GroupKind::R2,
        mat: g.mat,
    }
}

pub fn r2_entries_group(g: &GroupElement) -> (f64, f64) {
    (g.mat[(0, 0)].re, g.mat[(1, 0)].re)
}

pub fn r2_entries_alg(a: &AlgebraElement) -> (f64, f64) {
    (a.mat[(0, 0)].re, a.mat[(1, 0)].re)
}

pub fn im_line_group(y: f64) -> GroupElement {
    GroupElement {
        kind: GroupKind::ImLine,
        mat: CMat::from_element(1, 1, ci(y)),
    }
}

pub fn im_line_alg(y: f64) -> AlgebraElement {
    AlgebraElement {
        kind: GroupKind::ImLine,
        mat: CMat::from_element(1, 1, ci(y)),
    }
}

pub fn u1_alg(y: f64) -> AlgebraElement {
    AlgebraElement {
        kind: GroupKind::U1,
        mat: CMat::from_element(1, 1, ci(y)),
    }
}

/// Derivation of the Heisenberg algebra in (X, Y, Z) coordinates:
/// block form [[B, 0], [w^T, tr B]].
pub fn heis_aut_alg(b: [[f64; 2]; 2], w: [f64; 2]) -> AlgebraElement {
    let mut m = CMat::zeros(3, 3);
    m[(0, 0)] = c(b[0][0]);
    m[(0, 1)] = c(b[0][1]);
    m[(1, 0)] = c(b[1][0]);
    m[(1, 1)] = c(b[1][1]);
    m[(2, 0)] = c(w[0]);
    m[(2, 1)] = c(w[1]);
    m[(2, 2)] = c(b[0][0] + b[1][1]);
    AlgebraElement {
        kind: GroupKind::HeisAut,
        mat: m,
    }
}

// ---------------------------------------------------------------------------
// Random sampling (deterministic under a seeded RNG)
// ---------------------------------------------------------------------------

/// Random algebra element with basis coefficients in [-scale, scale].
pub fn random_algebra<R: Rng>(kind: GroupKind, rng: &mut R, scale: f64) -> AlgebraElement {
    let mut coeff = || rng.gen_range(-scale..scale);
    match kind {
        GroupKind::U1 => u1_alg(coeff()),
        GroupKind::ImLine => im_line_alg(coeff()),
        GroupKind::Su2 => su2_from_vec([coeff(), coeff(), coeff()]),
        GroupKind::So3 => so3_from_vec([coeff(), coeff(), coeff()]),
        GroupKind::Heis => heis_alg(coeff(), coeff(), coeff()),
        GroupKind::R2 => r2_alg(coeff(), coeff()),
        GroupKind::HeisAut => heis_aut_alg(
            [[coeff(), coeff()], [coeff(), coeff()]],
            [coeff(), coeff()],
        ),
    }
}

/// Random group element reached by exponentiating a bounded algebra element.
pub fn random_group<R: Rng>(kind: GroupKind, rng: &mut R, scale: f64) -> GroupElement {
    random_algebra(kind, rng, scale).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    const ALL_KINDS: [GroupKind; 7] = [
        GroupKind::U1,
        GroupKind::ImLine,
        GroupKind::Su2,
        GroupKind::So3,
        GroupKind::Heis,
        GroupKind::R2,
        GroupKind::HeisAut,
    ];

    #[test]
    fn exp_so3_half_turn_about_z() {
        let g = so3_from_vec([0.0, 0.0, PI]).exp();
        // Rotation by pi about z: e1 -> -e1, e2 -> -e2, e3 -> e3.
        let m = g.matrix();
        assert!((m[(0, 0)].re + 1.0).abs() < 1e-12);
        assert!((m[(1, 1)].re + 1.0).abs() < 1e-12);
        assert!((m[(2, 2)].re - 1.0).abs() < 1e-12);
        assert!(m[(0, 1)].norm() < 1e-12 && m[(1, 0)].norm() < 1e-12);
    }

    #[test]
    fn exp_u1_pi_is_minus_one() {
        let g = u1_alg(PI).exp();
        assert!((g.matrix()[(0, 0)] - c(-1.0)).norm() < 1e-14);
        let back = g.log().unwrap();
        assert!((back.matrix()[(0, 0)] - ci(PI)).norm() < 1e-12);
    }

    #[test]
    fn log_heis_terminating_series() {
        let x = heis_group(1.0, 1.0, 1.0).log().unwrap();
        let (a, b, h) = heis_alg_entries(&x);
        assert!((a - 1.0).abs() < 1e-15);
        assert!((b - 0.5).abs() < 1e-15);
        assert!((h - 1.0).abs() < 1e-15);
    }

    #[test]
    fn closed_form_exp_matches_series_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for kind in ALL_KINDS {
            for _ in 0..25 {
                let a = random_algebra(kind, &mut rng, 1.0);
                if kind.is_additive() {
                    // exp is the identity map there; nothing to cross-check.
                    assert!(a.exp().matrix() == a.matrix());
                    continue;
                }
                let closed = a.exp();
                let series = expm_reference(a.matrix(), 40);
                assert!(
                    (closed.matrix() - &series).norm() < 1e-13,
                    "{kind:?}: closed-form exp deviates from series"
                );
            }
        }
    }

    #[test]
    fn exp_log_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for kind in ALL_KINDS {
            for _ in 0..40 {
                let a = random_algebra(kind, &mut rng, 0.5);
                let g = a.exp();
                g.validate(1e-9).unwrap();
                let back = g.log().unwrap();
                assert!(
                    back.distance(&a) < 1e-9,
                    "{kind:?}: log(exp(a)) != a (defect {})",
                    back.distance(&a)
                );
            }
        }
    }

    #[test]
    fn log_rejects_half_turn_rotations() {
        let g = so3_from_vec([0.0, 0.0, PI]).exp();
        assert!(matches!(g.log(), Err(Error::LogBranch { .. })));
        let minus_one = su2_from_vec([0.0, 0.0, 2.0 * PI]).exp();
        assert!(matches!(minus_one.log(), Err(Error::LogBranch { .. })));
    }

    #[test]
    fn so3_bracket_is_cyclic() {
        let l1 = so3_from_vec([1.0, 0.0, 0.0]);
        let l2 = so3_from_vec([0.0, 1.0, 0.0]);
        let l3 = so3_from_vec([0.0, 0.0, 1.0]);
        assert!(l1.bracket(&l2).unwrap().distance(&l3) < 1e-15);
        let e1 = su2_from_vec([1.0, 0.0, 0.0]);
        let e2 = su2_from_vec([0.0, 1.0, 0.0]);
        let e3 = su2_from_vec([0.0, 0.0, 1.0]);
        assert!(e1.bracket(&e2).unwrap().distance(&e3) < 1e-15);
    }

    #[test]
    fn quaternion_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let a = random_algebra(GroupKind::So3, &mut rng, 1.4);
            let r = a.exp();
            let q = normalize4(rotation_to_quat(r.matrix()));
            let back = quat_to_rotation(q);
            assert!((r.matrix() - &back).norm() < 1e-12);
            // The lift through su(2) reproduces the rotation as well.
            let g = GroupElement::from_matrix(GroupKind::Su2, quat_to_su2(q)).unwrap();
            g.validate(1e-12).unwrap();
            let q2 = su2_to_quat(g.matrix());
            for k in 0..4 {
                assert!((q[k] - q2[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn additive_groups_compose_by_addition() {
        let a = r2_group(0.3, -0.2);
        let b = r2_group(1.0, 0.5);
        let (u, v) = r2_entries_group(&a.mul(&b).unwrap());
        assert!((u - 1.3).abs() < 1e-15 && (v - 0.3).abs() < 1e-15);
        let inv = a.inverse();
        assert!(a.mul(&inv).unwrap().is_identity(1e-15));
    }

    #[test]
    fn maurer_cartan_recovers_generator_along_one_parameter_subgroup() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for kind in ALL_KINDS {
            let a = random_algebra(kind, &mut rng, 0.6);
            for t in [0.2, 0.7, 1.3] {
                let g = a.scale(t).exp();
                // d/dt exp(tA) = exp(tA) A (and just A in additive groups).
                let dg = if kind.is_additive() {
                    a.matrix().clone()
                } else {
                    g.matrix() * a.matrix()
                };
                let pulled = maurer_cartan(&g, &dg).unwrap();
                assert!(
                    pulled.distance(&a) < 1e-12,
                    "{kind:?}: Maurer-Cartan along exp(tA) should be constant A"
                );
            }
        }
    }

    #[test]
    fn projection_restores_membership() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for kind in ALL_KINDS {
            for _ in 0..10 {
                let g = random_group(kind, &mut rng, 0.8);
                // Perturb and project back.
                let noise = CMat::from_fn(g.matrix().nrows(), g.matrix().ncols(), |_, _| {
                    C::new(rng.gen_range(-1e-6..1e-6), rng.gen_range(-1e-6..1e-6))
                });
                let dirty =
                    GroupElement::from_matrix(kind, g.matrix() + noise).unwrap();
                let clean = dirty.project();
                clean.validate(1e-9).unwrap();
                assert!(clean.distance(&g) < 1e-4);
            }
        }
    }

    #[test]
    fn heis_aut_exp_keeps_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..20 {
            let a = random_algebra(GroupKind::HeisAut, &mut rng, 0.7);
            a.validate(1e-12).unwrap();
            let g = a.exp();
            g.validate(1e-9).unwrap();
        }
    }
}
