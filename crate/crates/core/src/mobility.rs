//! The degenerate mobility `f(h) = |h|^3`, its regularization
//! `f_{δε}(z) = |z|^4/(|z|+ε) + δ`, and the entropy functions whose second
//! derivatives are `1/f_{δε}` and `z^α/f_ε`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

const QUAD_ABS_TOL: f64 = 1e-12;
const QUAD_REL_TOL: f64 = 1e-10;

/// Regularization parameters of the mobility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobilitySpec {
    pub delta: f64,
    pub epsilon: f64,
}

impl MobilitySpec {
    pub fn new(delta: f64, epsilon: f64) -> Self {
        MobilitySpec { delta, epsilon }
    }

    /// The unregularized cubic mobility.
    pub fn cubic() -> Self {
        MobilitySpec::new(0.0, 0.0)
    }
}

/// Anchor `c` of the entropy `G(z) = ∫_c^z (z - s)/f(s) ds` used when no
/// closed form is available, so that `G(c) = G'(c) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyRef {
    pub c: f64,
}

impl Default for EntropyRef {
    fn default() -> Self {
        EntropyRef { c: 1.0 }
    }
}

/// `f_{δε}(z)`.
#[inline]
pub fn mobility(z: f64, spec: MobilitySpec) -> f64 {
    let a = z.abs();
    if spec.epsilon == 0.0 {
        a * a * a + spec.delta
    } else {
        let a2 = a * a;
        a2 * a2 / (a + spec.epsilon) + spec.delta
    }
}

/// `f'_{δε}(z) = sgn(z) |z|^3 (3|z| + 4ε)/(|z| + ε)^2`.
#[inline]
pub fn mobility_derivative(z: f64, spec: MobilitySpec) -> f64 {
    let a = z.abs();
    let eps = spec.epsilon;
    let d = if eps == 0.0 {
        3.0 * a * a
    } else {
        a * a * a * (3.0 * a + 4.0 * eps) / ((a + eps) * (a + eps))
    };
    d.copysign(z)
}

fn require_positive(z: f64) -> Result<()> {
    if z > 0.0 && z.is_finite() {
        Ok(())
    } else {
        Err(invalid("z", format!("entropy needs a positive argument, got {z}")))
    }
}

fn require_zero_delta(spec: MobilitySpec) -> Result<()> {
    if spec.delta == 0.0 {
        Ok(())
    } else {
        Err(invalid("delta", "closed-form entropy requires delta = 0"))
    }
}

/// Closed-form entropy for δ = 0: `G_ε(z) = 1/(2z) + ε/(6z²)`.
pub fn entropy_g(z: f64, spec: MobilitySpec) -> Result<f64> {
    require_zero_delta(spec)?;
    require_positive(z)?;
    Ok(0.5 / z + spec.epsilon / (6.0 * z * z))
}

/// `G'_ε(z) = -1/(2z²) - ε/(3z³)`.
pub fn entropy_g_prime(z: f64, spec: MobilitySpec) -> Result<f64> {
    require_zero_delta(spec)?;
    require_positive(z)?;
    Ok(-0.5 / (z * z) - spec.epsilon / (3.0 * z * z * z))
}

fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let out = quadrature::integrate(f, a, b, QUAD_ABS_TOL);
    let allowed = QUAD_ABS_TOL.max(QUAD_REL_TOL * out.integral.abs());
    if !out.integral.is_finite() || out.error_estimate > allowed {
        return Err(Error::Quadrature {
            estimate: out.error_estimate,
        });
    }
    Ok(out.integral)
}

/// `G_{δε}(z) = ∫_c^z (z - s)/f_{δε}(s) ds` by quadrature. Nonnegative by
/// convexity, with `G(c) = G'(c) = 0`.
pub fn entropy_g_general(z: f64, spec: MobilitySpec, anchor: EntropyRef) -> Result<f64> {
    require_positive(z)?;
    require_positive(anchor.c)?;
    integrate(|s| (z - s) / mobility(s, spec), anchor.c, z).map(|v| v.max(0.0))
}

/// `G'_{δε}(z) = ∫_c^z ds / f_{δε}(s)` by quadrature.
pub fn entropy_g_general_prime(z: f64, spec: MobilitySpec, anchor: EntropyRef) -> Result<f64> {
    require_positive(z)?;
    require_positive(anchor.c)?;
    integrate(|s| 1.0 / mobility(s, spec), anchor.c, z)
}

/// Entropy value under the crate convention: closed form when δ = 0,
/// anchored quadrature otherwise.
pub fn entropy_value(z: f64, spec: MobilitySpec, anchor: EntropyRef) -> Result<f64> {
    if spec.delta == 0.0 {
        entropy_g(z, spec)
    } else {
        entropy_g_general(z, spec, anchor)
    }
}

/// `∫_a^b ds / f_{δε}(s)` for `0 < a, b`.
pub fn inverse_mobility_integral(a: f64, b: f64, spec: MobilitySpec) -> Result<f64> {
    if spec.delta == 0.0 {
        Ok(entropy_g_prime(b, spec)? - entropy_g_prime(a, spec)?)
    } else {
        integrate(|s| 1.0 / mobility(s, spec), a, b)
    }
}

pub fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > -0.5 && alpha < 1.0 && alpha != 0.0 {
        Ok(())
    } else {
        Err(invalid(
            "alpha",
            format!("must lie in (-1/2, 1) and be nonzero, got {alpha}"),
        ))
    }
}

/// α-entropy `z^{α-1}/((α-1)(α-2)) + ε z^{α-2}/((α-3)(α-2))`, whose second
/// derivative is `z^α / f_ε(z)`.
pub fn entropy_g_alpha(z: f64, alpha: f64, epsilon: f64) -> Result<f64> {
    check_alpha(alpha)?;
    require_positive(z)?;
    Ok(z.powf(alpha - 1.0) / ((alpha - 1.0) * (alpha - 2.0))
        + epsilon * z.powf(alpha - 2.0) / ((alpha - 3.0) * (alpha - 2.0)))
}
