//! Constant coefficient matrices of the first-order system
//! `B⁰ ∂_τU + τ^{γ-7/3} Bⁱ ∂_iU = (1/τ) 𝓑 ℙ U (+ (1/τ) H)`.
//!
//! Component order is `U = (u₀, u₁, u₂, u₃, u)`.

use serde::Serialize;

use crate::{Error, Result};

pub type Mat5 = [[f64; 5]; 5];

const ZERO: Mat5 = [[0.0; 5]; 5];

pub fn matmul(a: &Mat5, b: &Mat5) -> Mat5 {
    let mut out = ZERO;
    for i in 0..5 {
        for j in 0..5 {
            out[i][j] = (0..5).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn transpose(a: &Mat5) -> Mat5 {
    let mut out = ZERO;
    for i in 0..5 {
        for j in 0..5 {
            out[i][j] = a[j][i];
        }
    }
    out
}

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff(a: &Mat5, b: &Mat5) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..5 {
        for j in 0..5 {
            worst = worst.max((a[i][j] - b[i][j]).abs());
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemMatrices {
    pub b0: Mat5,
    pub bi: [Mat5; 3],
    pub cal_b: Mat5,
    pub p: Mat5,
}

/// Deviations of the structural identities from exactness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityDefects {
    pub p_idempotent: f64,
    pub p_symmetric: f64,
    pub commutator: f64,
    pub bi_symmetric: f64,
}

impl IdentityDefects {
    pub fn max(&self) -> f64 {
        self.p_idempotent
            .max(self.p_symmetric)
            .max(self.commutator)
            .max(self.bi_symmetric)
    }
}

pub fn assemble_matrices(gamma: f64, kappa_tilde: f64) -> Result<SystemMatrices> {
    if !(gamma > 1.0 && gamma.is_finite()) {
        return Err(Error::invalid("gamma", gamma, "must exceed 1"));
    }
    if !(kappa_tilde > 0.0 && kappa_tilde.is_finite()) {
        return Err(Error::invalid("kappa_tilde", kappa_tilde, "must be positive"));
    }
    let kt = kappa_tilde;
    let mut b0 = ZERO;
    let mut cal_b = ZERO;
    b0[0][0] = 1.0;
    b0[4][4] = 1.0;
    cal_b[0][0] = 5.0 / 3.0;
    cal_b[4][4] = 5.0 / 3.0;
    for i in 1..4 {
        b0[i][i] = kt;
        cal_b[i][i] = kt * (gamma - 2.0 / 3.0);
    }
    let mut bi = [ZERO; 3];
    for (axis, b) in bi.iter_mut().enumerate() {
        b[0][axis + 1] = kt;
        b[axis + 1][0] = kt;
    }
    let s6 = 6f64.sqrt();
    let mut p = ZERO;
    p[0][0] = 3.0 / 5.0;
    p[0][4] = -s6 / 5.0;
    p[4][0] = -s6 / 5.0;
    p[4][4] = 2.0 / 5.0;
    for i in 1..4 {
        p[i][i] = 1.0;
    }
    Ok(SystemMatrices { b0, bi, cal_b, p })
}

impl SystemMatrices {
    /// `(B⁰)⁻¹`; `B⁰` is diagonal.
    pub fn b0_inv(&self) -> Mat5 {
        let mut out = ZERO;
        for i in 0..5 {
            out[i][i] = 1.0 / self.b0[i][i];
        }
        out
    }

    /// `(B⁰)⁻¹ 𝓑`.
    pub fn decay_rates(&self) -> Mat5 {
        matmul(&self.b0_inv(), &self.cal_b)
    }

    /// `𝓑 ℙ`, the coefficient of the singular term.
    pub fn singular_coefficient(&self) -> Mat5 {
        matmul(&self.cal_b, &self.p)
    }

    pub fn identity_defects(&self) -> IdentityDefects {
        let p2 = matmul(&self.p, &self.p);
        let a = self.decay_rates();
        let comm = max_abs_diff(&matmul(&a, &self.p), &matmul(&self.p, &a));
        let bi_sym = self
            .bi
            .iter()
            .map(|b| max_abs_diff(b, &transpose(b)))
            .fold(0.0, f64::max);
        IdentityDefects {
            p_idempotent: max_abs_diff(&p2, &self.p),
            p_symmetric: max_abs_diff(&self.p, &transpose(&self.p)),
            commutator: comm,
            bi_symmetric: bi_sym,
        }
    }
}
