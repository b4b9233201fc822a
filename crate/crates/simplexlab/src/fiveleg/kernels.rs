//! Oscillator building blocks: the additive delta Φ, the reordering matrix Λ,
//! and the weighted splittings Φ̄, Ψ̄. All of them vanish off their support,
//! including at negative occupation numbers.

use crate::qseries::{poch, weight_w_q, QParams};
use num_complex::Complex64 as C64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Φ_{a,b}^{c} = δ_{a+b,c}.
pub fn phi_delta(a: i64, b: i64, c: i64) -> C64 {
    if a + b == c {
        ONE
    } else {
        ZERO
    }
}

/// Λ_{a,c}^{a',c'} = δ_{a−a',c−c'} ⟨a';c'⟩ (q²;q²)_{a,c} / (q²;q²)_{a−a',a',c'}.
pub fn lambda_kernel(qp: &QParams, a: i64, c: i64, ap: i64, cp: i64) -> C64 {
    let k = a - ap;
    if k != c - cp || k < 0 || ap < 0 || cp < 0 {
        return ZERO;
    }
    let q2 = qp.q2();
    let num = poch(q2, q2, a) * poch(q2, q2, c);
    let den = poch(q2, q2, k) * poch(q2, q2, ap) * poch(q2, q2, cp);
    crate::kernel::int_pow(qp.q, 2 * ap * cp) * num / den
}

/// Φ̄^{a,b}_{c}(λ, μ) = δ_{c,a+b} w_λ(a) w_μ(b) / (⟨λ;b⟩ w_{λ+μ}(c)).
pub fn phibar(qp: &QParams, lambda: C64, mu: C64, a: i64, b: i64, c: i64) -> C64 {
    if c != a + b || a < 0 || b < 0 {
        return ZERO;
    }
    weight_w_q(qp, lambda, a) * weight_w_q(qp, mu, b) / (qp.bracket(lambda, b) * weight_w_q(qp, lambda + mu, c))
}

/// Ψ̄^{a,b}_{c}(λ, μ) = δ_{c,a+b} w_λ(a) w_μ(b) / (⟨μ;a⟩ w_{λ+μ}(c)).
pub fn psibar(qp: &QParams, lambda: C64, mu: C64, a: i64, b: i64, c: i64) -> C64 {
    if c != a + b || a < 0 || b < 0 {
        return ZERO;
    }
    weight_w_q(qp, lambda, a) * weight_w_q(qp, mu, b) / (qp.bracket(mu, a) * weight_w_q(qp, lambda + mu, c))
}
