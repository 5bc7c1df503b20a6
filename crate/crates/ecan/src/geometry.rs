//! Quadric (ellipsoid) representation, symmetric eigendecomposition and
//! local/global frame transforms for the 2D and 3D planning spaces.

use nalgebra::{SMatrix, SVector};
use thiserror::Error;

use crate::tol;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("quadric matrix is not symmetric (max asymmetry {0:.3e})")]
    NonSymmetric(f64),
    #[error("quadric matrix is singular or near-singular (|λ|min {0:.3e})")]
    DegenerateQuadric(f64),
    #[error("frame is not orthonormal (max defect {0:.3e})")]
    InvalidFrame(f64),
    #[error("frame is left-handed (determinant {0:.6})")]
    LeftHandedFrame(f64),
    #[error("direction vector has near-zero length")]
    ZeroDirection,
}

/// Quadric surface `Ψ(x) = xᵀPx + qᵀx + r`; the set `Ψ ≤ 0` is an
/// ellipsoid when `P` is positive definite.
#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid<const D: usize> {
    pub p: SMatrix<f64, D, D>,
    pub q: SVector<f64, D>,
    pub r: f64,
}

impl<const D: usize> Ellipsoid<D> {
    /// Builds an ellipsoid, rejecting matrices that are asymmetric beyond
    /// tolerance. The stored matrix is symmetrized exactly.
    pub fn new(p: SMatrix<f64, D, D>, q: SVector<f64, D>, r: f64) -> Result<Self, GeometryError> {
        let mut max_asym = 0.0f64;
        for i in 0..D {
            for j in (i + 1)..D {
                max_asym = max_asym.max((p[(i, j)] - p[(j, i)]).abs());
            }
        }
        if max_asym > tol::SYMMETRY {
            return Err(GeometryError::NonSymmetric(max_asym));
        }
        let sym = (p + p.transpose()) * 0.5;
        Ok(Self { p: sym, q, r })
    }

    /// Quadric value at `z`; negative iff `z` is strictly inside.
    pub fn value(&self, z: &SVector<f64, D>) -> f64 {
        (self.p * z).dot(z) + self.q.dot(z) + self.r
    }

    /// Gradient `2Pz + q` of the quadric at `z`.
    pub fn gradient(&self, z: &SVector<f64, D>) -> SVector<f64, D> {
        self.p * z * 2.0 + self.q
    }

    /// Stationary point `−½P⁻¹q` of the quadric.
    pub fn center(&self) -> Result<SVector<f64, D>, GeometryError> {
        let spectrum = eigen_symmetric(&self.p);
        let scale = spectrum
            .eigenvalues
            .iter()
            .fold(0.0f64, |a, &l| a.max(l.abs()));
        let smallest = spectrum
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |a, &l| a.min(l.abs()));
        if smallest <= tol::SINGULAR * scale.max(1.0) {
            return Err(GeometryError::DegenerateQuadric(smallest));
        }
        solve_linear(&self.p, &(-self.q * 0.5))
            .ok_or(GeometryError::DegenerateQuadric(smallest))
    }

    /// Eigen-decomposition of `P`.
    pub fn spectrum(&self) -> Spectrum<D> {
        eigen_symmetric(&self.p)
    }

    /// Semi-axis lengths of the `Ψ = 0` surface, paired with the ascending
    /// eigenvalues. Requires a negative value at the center.
    pub fn semi_axes(&self) -> Result<[f64; D], GeometryError> {
        let c = self.center()?;
        let v = self.value(&c);
        if v >= 0.0 {
            return Err(GeometryError::DegenerateQuadric(v));
        }
        let spectrum = self.spectrum();
        let mut axes = [0.0; D];
        for (axis, lambda) in axes.iter_mut().zip(spectrum.eigenvalues.iter()) {
            *axis = (-v / lambda).sqrt();
        }
        Ok(axes)
    }
}

/// Agent pose: a position and an orthonormal frame whose first column is
/// the direction of motion.
#[derive(Debug, Clone, PartialEq)]
pub struct Pose<const D: usize> {
    pub position: SVector<f64, D>,
    pub frame: SMatrix<f64, D, D>,
}

impl<const D: usize> Pose<D> {
    pub fn new(
        position: SVector<f64, D>,
        frame: SMatrix<f64, D, D>,
    ) -> Result<Self, GeometryError> {
        let gram = frame.transpose() * frame;
        let mut defect = 0.0f64;
        for i in 0..D {
            for j in 0..D {
                let target = if i == j { 1.0 } else { 0.0 };
                defect = defect.max((gram[(i, j)] - target).abs());
            }
        }
        if defect > tol::FRAME_ORTHO {
            return Err(GeometryError::InvalidFrame(defect));
        }
        if D == 3 {
            let det = determinant(&frame);
            if det < 0.0 {
                return Err(GeometryError::LeftHandedFrame(det));
            }
        }
        Ok(Self { position, frame })
    }

    /// Pose at `position` whose x-axis points along `heading`.
    pub fn facing(
        position: SVector<f64, D>,
        heading: &SVector<f64, D>,
    ) -> Result<Self, GeometryError> {
        let frame = frame_from_heading(heading)?;
        Ok(Self { position, frame })
    }

    pub fn axis(&self, i: usize) -> SVector<f64, D> {
        self.frame.column(i).into_owned()
    }

    pub fn local_to_global(&self, v_local: &SVector<f64, D>) -> SVector<f64, D> {
        self.position + self.frame * v_local
    }

    pub fn global_to_local(&self, z: &SVector<f64, D>) -> SVector<f64, D> {
        self.frame.transpose() * (z - self.position)
    }
}

/// Orthonormal frame whose first column is the normalized `heading`.
/// In 3D the remaining columns are completed deterministically from the
/// world vertical (or the y-axis when the heading is near-vertical) and the
/// result is right-handed.
pub fn frame_from_heading<const D: usize>(
    heading: &SVector<f64, D>,
) -> Result<SMatrix<f64, D, D>, GeometryError> {
    let norm = heading.norm();
    if norm < tol::ZERO_DIRECTION {
        return Err(GeometryError::ZeroDirection);
    }
    let x = heading / norm;
    let mut frame = SMatrix::<f64, D, D>::zeros();
    frame.set_column(0, &x);
    if D == 2 {
        frame[(0, 1)] = -x[1];
        frame[(1, 1)] = x[0];
    } else {
        let up = if x[2].abs() > 0.9 {
            SVector::<f64, D>::from_fn(|i, _| if i == 1 { 1.0 } else { 0.0 })
        } else {
            SVector::<f64, D>::from_fn(|i, _| if i == 2 { 1.0 } else { 0.0 })
        };
        let y = cross3(&up, &x);
        let y = y / y.norm();
        let z = cross3(&x, &y);
        frame.set_column(1, &y);
        frame.set_column(2, &z);
    }
    Ok(frame)
}

/// Determinant for the small dimensions used here (no type-level bound on
/// `D` is available for nalgebra's own implementation).
pub fn determinant<const D: usize>(m: &SMatrix<f64, D, D>) -> f64 {
    match D {
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        3 => {
            m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
                - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
                + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)])
        }
        _ => unreachable!("planning spaces are 2- or 3-dimensional"),
    }
}

/// Direct solve of `A·x = b` by elimination with partial pivoting.
pub fn solve_linear<const D: usize>(
    a: &SMatrix<f64, D, D>,
    b: &SVector<f64, D>,
) -> Option<SVector<f64, D>> {
    let mut m = *a;
    let mut rhs = *b;
    for col in 0..D {
        let mut piv = col;
        for row in (col + 1)..D {
            if m[(row, col)].abs() > m[(piv, col)].abs() {
                piv = row;
            }
        }
        if m[(piv, col)].abs() < 1e-300 {
            return None;
        }
        if piv != col {
            m.swap_rows(piv, col);
            rhs.swap_rows(piv, col);
        }
        for row in (col + 1)..D {
            let f = m[(row, col)] / m[(col, col)];
            for k in col..D {
                m[(row, k)] -= f * m[(col, k)];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = SVector::<f64, D>::zeros();
    for row in (0..D).rev() {
        let mut s = rhs[row];
        for k in (row + 1)..D {
            s -= m[(row, k)] * x[k];
        }
        x[row] = s / m[(row, row)];
    }
    Some(x)
}

fn cross3<const D: usize>(a: &SVector<f64, D>, b: &SVector<f64, D>) -> SVector<f64, D> {
    debug_assert_eq!(D, 3);
    SVector::<f64, D>::from_fn(|i, _| match i {
        0 => a[1] * b[2] - a[2] * b[1],
        1 => a[2] * b[0] - a[0] * b[2],
        _ => a[0] * b[1] - a[1] * b[0],
    })
}

/// Eigenvalues (ascending) and matching orthonormal eigenvectors of a
/// symmetric matrix.
#[derive(Debug, Clone)]
pub struct Spectrum<const D: usize> {
    pub eigenvalues: [f64; D],
    pub eigenvectors: [SVector<f64, D>; D],
}

impl<const D: usize> Spectrum<D> {
    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues[D - 1]
    }

    pub fn min_vector(&self) -> &SVector<f64, D> {
        &self.eigenvectors[0]
    }
}

/// Symmetric eigendecomposition via cyclic Jacobi rotations. A 2×2 input
/// diagonalizes exactly in one rotation, which coincides with the closed
/// form; 3×3 inputs converge in a few sweeps. Eigenvalue clusters closer
/// than the degeneracy tolerance get deterministic canonical-axis-aligned
/// eigenvectors so downstream direction choices are reproducible.
pub fn eigen_symmetric<const D: usize>(p: &SMatrix<f64, D, D>) -> Spectrum<D> {
    let mut a = (p + p.transpose()) * 0.5;
    let mut v = SMatrix::<f64, D, D>::identity();
    let scale = a.amax().max(1e-300);

    for _sweep in 0..50 {
        let mut off = 0.0f64;
        for i in 0..D {
            for j in (i + 1)..D {
                off = off.max(a[(i, j)].abs());
            }
        }
        if off <= 1e-15 * scale {
            break;
        }
        for i in 0..D {
            for j in (i + 1)..D {
                let apq = a[(i, j)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = a[(i, i)];
                let aqq = a[(j, j)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Apply the rotation G(i, j, θ) on both sides of A and
                // accumulate it into V.
                for k in 0..D {
                    let aki = a[(k, i)];
                    let akj = a[(k, j)];
                    a[(k, i)] = c * aki - s * akj;
                    a[(k, j)] = s * aki + c * akj;
                }
                for k in 0..D {
                    let aik = a[(i, k)];
                    let ajk = a[(j, k)];
                    a[(i, k)] = c * aik - s * ajk;
                    a[(j, k)] = s * aik + c * ajk;
                }
                for k in 0..D {
                    let vki = v[(k, i)];
                    let vkj = v[(k, j)];
                    v[(k, i)] = c * vki - s * vkj;
                    v[(k, j)] = s * vki + c * vkj;
                }
            }
        }
    }

    let mut order: [usize; D] = [0; D];
    for (i, slot) in order.iter_mut().enumerate() {
        *slot = i;
    }
    order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).unwrap());

    let mut eigenvalues = [0.0; D];
    let mut eigenvectors = [SVector::<f64, D>::zeros(); D];
    for (slot, &src) in order.iter().enumerate() {
        eigenvalues[slot] = a[(src, src)];
        eigenvectors[slot] = v.column(src).into_owned();
    }

    canonicalize_clusters(&mut eigenvalues, &mut eigenvectors, scale);
    for vec in eigenvectors.iter_mut() {
        fix_sign(vec);
    }

    Spectrum {
        eigenvalues,
        eigenvectors,
    }
}

/// Replaces the eigenvectors of each degenerate eigenvalue cluster by the
/// orthonormalized projections of the canonical axes onto the cluster's
/// invariant subspace, taking axes in index order.
fn canonicalize_clusters<const D: usize>(
    eigenvalues: &mut [f64; D],
    eigenvectors: &mut [SVector<f64, D>; D],
    scale: f64,
) {
    let tol_cluster = tol::EIGEN_DEGENERATE * scale.max(1.0);
    let mut start = 0;
    while start < D {
        let mut end = start + 1;
        while end < D && (eigenvalues[end] - eigenvalues[end - 1]).abs() <= tol_cluster {
            end += 1;
        }
        let size = end - start;
        if size > 1 {
            let basis: Vec<SVector<f64, D>> = eigenvectors[start..end].to_vec();
            let mut chosen: Vec<SVector<f64, D>> = Vec::with_capacity(size);
            for axis in 0..D {
                if chosen.len() == size {
                    break;
                }
                let e = SVector::<f64, D>::from_fn(|i, _| if i == axis { 1.0 } else { 0.0 });
                // Project the axis into the cluster subspace, then strip the
                // directions already chosen.
                let mut w = SVector::<f64, D>::zeros();
                for b in &basis {
                    w += b * b.dot(&e);
                }
                for c in &chosen {
                    w -= c * c.dot(&w);
                }
                let n = w.norm();
                if n > 1e-6 {
                    chosen.push(w / n);
                }
            }
            // A full-dimensional cluster always yields the canonical axes;
            // partial clusters always find enough independent axes because
            // the projector has rank `size`.
            for (k, c) in chosen.into_iter().enumerate() {
                eigenvectors[start + k] = c;
            }
        }
        start = end;
    }
}

/// Deterministic sign convention: the largest-magnitude component of each
/// eigenvector is made positive.
fn fix_sign<const D: usize>(v: &mut SVector<f64, D>) {
    let mut best = 0;
    for i in 1..D {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        *v = -*v;
    }
}
