//! Fixed-size complex linear algebra for a single qutrit.
//!
//! Everything here is a small `Copy` value: a three-component state vector,
//! a 3×3 operator and a 3×3 density matrix. The protocol chains multiply at
//! most a few thousand of these, so no heap or general-N machinery is used.

use std::fmt;
use std::ops::{Add, Mul, Sub};

pub use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// Tolerance for unitary algebra (norms, unitarity, idempotence).
pub const UNITARY_TOL: f64 = 1e-12;
/// Tolerance for density-matrix checks (trace, Hermiticity, positivity).
pub const DENSITY_TOL: f64 = 1e-10;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Clamps a computed probability into `[0, 1]`.
///
/// Rounding in long products leaves values like `-1e-17` or `1 + 2e-16`;
/// anything outside `[-DENSITY_TOL, 1 + DENSITY_TOL]` is a genuine bug and
/// trips a debug assertion.
pub fn clamp_probability(p: f64) -> f64 {
    debug_assert!(
        (-DENSITY_TOL..=1.0 + DENSITY_TOL).contains(&p),
        "probability {p} outside [0, 1] beyond tolerance"
    );
    p.clamp(0.0, 1.0)
}

/// Amplitudes `c0|0> + c1|1> + c2|2>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PureState3 {
    pub amps: [C64; 3],
}

impl PureState3 {
    pub fn new(c0: C64, c1: C64, c2: C64) -> Self {
        PureState3 { amps: [c0, c1, c2] }
    }

    pub fn from_real(c0: f64, c1: f64, c2: f64) -> Self {
        Self::new(C64::new(c0, 0.0), C64::new(c1, 0.0), C64::new(c2, 0.0))
    }

    /// Computational basis state `|k>`.
    pub fn basis(k: usize) -> Self {
        assert!(k < 3, "qutrit basis index {k} out of range");
        let mut amps = [ZERO; 3];
        amps[k] = ONE;
        PureState3 { amps }
    }

    pub fn ground() -> Self {
        Self::basis(0)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= UNITARY_TOL
    }

    /// Raw `|c_k|^2`, not clamped (the state may be unnormalized).
    pub fn populations(&self) -> [f64; 3] {
        self.amps.map(|c| c.norm_sqr())
    }

    pub fn is_finite(&self) -> bool {
        self.amps.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn inner(&self, other: &PureState3) -> C64 {
        self.amps.iter().zip(other.amps.iter()).map(|(a, b)| a.conj() * b).sum()
    }
}

/// A 3×3 complex matrix, row-major.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Operator3 {
    pub m: [[C64; 3]; 3],
}

impl fmt::Debug for Operator3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Operator3 [")?;
        for row in &self.m {
            writeln!(
                f,
                "  [{:+.6}{:+.6}i, {:+.6}{:+.6}i, {:+.6}{:+.6}i]",
                row[0].re, row[0].im, row[1].re, row[1].im, row[2].re, row[2].im
            )?;
        }
        write!(f, "]")
    }
}

impl Operator3 {
    pub fn from_rows(m: [[C64; 3]; 3]) -> Self {
        Operator3 { m }
    }

    pub fn zeros() -> Self {
        Operator3 { m: [[ZERO; 3]; 3] }
    }

    pub fn identity() -> Self {
        Self::diag([ONE; 3])
    }

    pub fn diag(d: [C64; 3]) -> Self {
        let mut out = Self::zeros();
        for (k, v) in d.into_iter().enumerate() {
            out.m[k][k] = v;
        }
        out
    }

    /// `|k><l|`
    pub fn ket_bra(k: usize, l: usize) -> Self {
        let mut out = Self::zeros();
        out.m[k][l] = ONE;
        out
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.m[row][col]
    }

    pub fn matmul(&self, rhs: &Operator3) -> Operator3 {
        let mut out = Self::zeros();
        for i in 0..3 {
            for j in 0..3 {
                out.m[i][j] = self.m[i][0] * rhs.m[0][j] + self.m[i][1] * rhs.m[1][j] + self.m[i][2] * rhs.m[2][j];
            }
        }
        out
    }

    pub fn apply(&self, psi: &PureState3) -> PureState3 {
        let a = &psi.amps;
        let row = |i: usize| self.m[i][0] * a[0] + self.m[i][1] * a[1] + self.m[i][2] * a[2];
        PureState3 {
            amps: [row(0), row(1), row(2)],
        }
    }

    pub fn adjoint(&self) -> Operator3 {
        let mut out = Self::zeros();
        for i in 0..3 {
            for j in 0..3 {
                out.m[i][j] = self.m[j][i].conj();
            }
        }
        out
    }

    pub fn scale(&self, s: C64) -> Operator3 {
        let mut out = *self;
        out.m.iter_mut().flatten().for_each(|z| *z *= s);
        out
    }

    pub fn trace(&self) -> C64 {
        self.m[0][0] + self.m[1][1] + self.m[2][2]
    }

    /// Largest elementwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Operator3) -> f64 {
        self.m
            .iter()
            .flatten()
            .zip(other.m.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `U†U = I` elementwise within `tol`.
    pub fn is_unitary(&self, tol: f64) -> bool {
        self.adjoint().matmul(self).max_abs_diff(&Self::identity()) <= tol
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_abs_diff(&self.adjoint()) <= tol
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn determinant(&self) -> C64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Inverse via the adjugate. Fails when `|det| < min_det`.
    pub fn inverse(&self, min_det: f64) -> crate::Result<Operator3> {
        let det = self.determinant();
        if det.norm().is_nan() || det.norm() < min_det {
            return Err(crate::IfmError::Singular { det: det.norm() });
        }
        let m = &self.m;
        let cof = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
        // adj[i][j] = cofactor of m[j][i]
        let adj = [
            [cof(1, 2, 1, 2), -cof(0, 2, 1, 2), cof(0, 1, 1, 2)],
            [-cof(1, 2, 0, 2), cof(0, 2, 0, 2), -cof(0, 1, 0, 2)],
            [cof(1, 2, 0, 1), -cof(0, 2, 0, 1), cof(0, 1, 0, 1)],
        ];
        Ok(Operator3::from_rows(adj).scale(det.inv()))
    }

    /// `self^k` by repeated squaring.
    pub fn pow(&self, mut k: u64) -> Operator3 {
        let mut base = *self;
        let mut acc = Self::identity();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.matmul(&base);
            }
            base = base.matmul(&base);
            k >>= 1;
        }
        acc
    }
}

impl Mul for Operator3 {
    type Output = Operator3;
    fn mul(self, rhs: Operator3) -> Operator3 {
        self.matmul(&rhs)
    }
}

impl Mul<PureState3> for Operator3 {
    type Output = PureState3;
    fn mul(self, rhs: PureState3) -> PureState3 {
        self.apply(&rhs)
    }
}

impl Add for Operator3 {
    type Output = Operator3;
    fn add(self, rhs: Operator3) -> Operator3 {
        let mut out = self;
        out.m
            .iter_mut()
            .flatten()
            .zip(rhs.m.iter().flatten())
            .for_each(|(a, b)| *a += b);
        out
    }
}

impl Sub for Operator3 {
    type Output = Operator3;
    fn sub(self, rhs: Operator3) -> Operator3 {
        self + rhs.scale(C64::new(-1.0, 0.0))
    }
}

/// 3×3 density matrix. Conditional (trace < 1) states are allowed; the
/// projective chain carries its state unnormalized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix3 {
    pub elements: Operator3,
}

impl DensityMatrix3 {
    pub fn from_operator(elements: Operator3) -> Self {
        DensityMatrix3 { elements }
    }

    pub fn pure(psi: &PureState3) -> Self {
        let mut m = Operator3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                m.m[i][j] = psi.amps[i] * psi.amps[j].conj();
            }
        }
        DensityMatrix3 { elements: m }
    }

    pub fn ground() -> Self {
        Self::pure(&PureState3::ground())
    }

    pub fn diagonal(p: [f64; 3]) -> Self {
        DensityMatrix3 {
            elements: Operator3::diag(p.map(|x| C64::new(x, 0.0))),
        }
    }

    pub fn trace(&self) -> f64 {
        self.elements.trace().re
    }

    /// Raw diagonal entries.
    pub fn populations(&self) -> [f64; 3] {
        [0, 1, 2].map(|k| self.elements.m[k][k].re)
    }

    /// Diagonal entries clamped into `[0, 1]`.
    pub fn probabilities(&self) -> [f64; 3] {
        self.populations().map(clamp_probability)
    }

    pub fn purity(&self) -> f64 {
        self.elements.matmul(&self.elements).trace().re
    }

    /// `U ρ U†`
    pub fn conjugate_by(&self, u: &Operator3) -> DensityMatrix3 {
        DensityMatrix3 {
            elements: u.matmul(&self.elements).matmul(&u.adjoint()),
        }
    }

    /// `P ρ P` for a Hermitian projector `P`.
    pub fn project(&self, p: &Operator3) -> DensityMatrix3 {
        DensityMatrix3 {
            elements: p.matmul(&self.elements).matmul(p),
        }
    }

    /// Replaces the matrix by `(ρ + ρ†)/2`.
    pub fn symmetrize(&self) -> DensityMatrix3 {
        let e = self.elements + self.elements.adjoint();
        DensityMatrix3 {
            elements: e.scale(C64::new(0.5, 0.0)),
        }
    }

    pub fn is_hermitian(&self) -> bool {
        self.elements.is_hermitian(UNITARY_TOL)
    }

    /// Eigenvalues in ascending order, for a Hermitian matrix.
    ///
    /// Solves the real characteristic cubic with the trigonometric method.
    pub fn eigenvalues(&self) -> [f64; 3] {
        // Cyclic Jacobi on the real 6x6 embedding [[Re, -Im], [Im, Re]],
        // whose spectrum is that of the Hermitian part, each value doubled.
        // Unlike the trigonometric cubic formula this stays accurate for
        // degenerate spectra such as pure states.
        let m = &self.elements.m;
        let mut a = [[0.0f64; 6]; 6];
        for i in 0..3 {
            for j in 0..3 {
                let h = (m[i][j] + m[j][i].conj()) * 0.5;
                a[i][j] = h.re;
                a[i + 3][j + 3] = h.re;
                a[i][j + 3] = -h.im;
                a[i + 3][j] = h.im;
            }
        }
        for _ in 0..50 {
            let off: f64 = (0..6)
                .flat_map(|i| (0..6).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[i][j] * a[i][j])
                .sum();
            if off < 1e-36 {
                break;
            }
            for p in 0..5 {
                for q in p + 1..6 {
                    if a[p][q].abs() < 1e-300 {
                        continue;
                    }
                    let tau = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                    let t = if tau == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    for row in a.iter_mut() {
                        let (akp, akq) = (row[p], row[q]);
                        row[p] = c * akp - s * akq;
                        row[q] = s * akp + c * akq;
                    }
                    let (row_p, row_q) = (a[p], a[q]);
                    a[p] = std::array::from_fn(|k| c * row_p[k] - s * row_q[k]);
                    a[q] = std::array::from_fn(|k| s * row_p[k] + c * row_q[k]);
                }
            }
        }
        let mut ev: [f64; 6] = std::array::from_fn(|i| a[i][i]);
        ev.sort_by(f64::total_cmp);
        [ev[0], ev[2], ev[4]]
    }

    /// Hermitian within 1e-12, trace within 1e-10 of `expected_trace`, and
    /// eigenvalues no lower than -1e-10.
    pub fn is_valid(&self, expected_trace: f64) -> bool {
        self.elements.is_finite()
            && self.is_hermitian()
            && (self.trace() - expected_trace).abs() <= DENSITY_TOL
            && self.eigenvalues()[0] >= -DENSITY_TOL
    }
}

pub fn matmul(a: &Operator3, b: &Operator3) -> Operator3 {
    a.matmul(b)
}

pub fn apply(u: &Operator3, psi: &PureState3) -> PureState3 {
    u.apply(psi)
}

pub fn conjugate_by(u: &Operator3, rho: &DensityMatrix3) -> DensityMatrix3 {
    rho.conjugate_by(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{b_pulse, beam_splitter};
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

    #[test]
    fn identity_products() {
        let i = Operator3::identity();
        assert_eq!(i * i, i);
        let psi = PureState3::ground();
        assert_eq!(apply(&i, &psi), psi);
    }

    #[test]
    fn beam_splitter_on_ground() {
        let out = beam_splitter(FRAC_PI_2).apply(&PureState3::ground());
        assert!((out.amps[0].re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((out.amps[1].re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(out.amps[2], C64::new(0.0, 0.0));
    }

    #[test]
    fn beam_splitter_group_property() {
        let half = beam_splitter(FRAC_PI_2);
        assert!((half * half).max_abs_diff(&beam_splitter(PI)) < 1e-15);
    }

    #[test]
    fn single_ramsey_step_table_entry() {
        let s = beam_splitter(FRAC_PI_2);
        let u = s * b_pulse(PI, FRAC_PI_2) * s;
        let p = u.apply(&PureState3::ground()).populations();
        for (got, want) in p.iter().zip([0.25, 0.25, 0.5]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn conjugation_of_ground_projector() {
        let rho = DensityMatrix3::ground().conjugate_by(&beam_splitter(FRAC_PI_2));
        let p = rho.populations();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15 && p[2].abs() < 1e-15);
        assert!(rho.is_valid(1.0));
        assert_eq!(
            DensityMatrix3::ground().conjugate_by(&Operator3::identity()),
            DensityMatrix3::ground()
        );
    }

    #[test]
    fn inverse_and_pow() {
        let u = beam_splitter(0.3) * b_pulse(1.1, 0.4);
        let inv = u.inverse(1e-14).unwrap();
        assert!((u * inv).max_abs_diff(&Operator3::identity()) < 1e-14);
        let direct = (0..7).fold(Operator3::identity(), |acc, _| acc * u);
        assert!(u.pow(7).max_abs_diff(&direct) < 1e-13);
        assert!(Operator3::ket_bra(0, 0).inverse(1e-14).is_err());
    }

    #[test]
    fn eigenvalues_of_diagonal_and_rotated() {
        let rho = DensityMatrix3::diagonal([0.5, 0.2, 0.3]);
        assert_eq!(rho.eigenvalues(), [0.2, 0.3, 0.5]);
        let rotated = rho.conjugate_by(&(beam_splitter(0.7) * b_pulse(2.1, 0.3)));
        let ev = rotated.eigenvalues();
        for (a, b) in ev.iter().zip([0.2, 0.3, 0.5]) {
            assert!((a - b).abs() < 1e-12, "{ev:?}");
        }
    }

    #[test]
    fn clamp_small_negative() {
        assert_eq!(clamp_probability(-1e-17), 0.0);
        assert_eq!(clamp_probability(1.0 + 1e-15), 1.0);
    }
}
