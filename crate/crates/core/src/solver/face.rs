//! Face values of the mobility between neighbouring nodes.

use serde::{Deserialize, Serialize};

use crate::mobility::{inverse_mobility_integral, mobility, mobility_derivative, MobilitySpec};

/// How the mobility at a face is built from the two adjacent nodal values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaceRule {
    #[default]
    ArithmeticMean,
    HarmonicMean,
    /// `(b - a) / ∫_a^b ds/f(s)`, the mean for which the discrete entropy
    /// identity is exact.
    EntropicMean,
}

/// Face mobility and its partial derivatives in the left and right values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceMobility {
    pub value: f64,
    pub d_left: f64,
    pub d_right: f64,
}

const GL4_NODES: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GL4_WEIGHTS: [f64; 4] = [
    0.347_854_845_137_453_9,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_9,
];

/// Relative face width below which `∫ds/f` is taken by 4-point
/// Gauss-Legendre instead of the closed form.
const NARROW: f64 = 1e-2;
/// Relative width below which the entropic mean is differentiated as if
/// it were the midpoint mobility.
const DEGENERATE: f64 = 1e-6;

pub fn face_mobility(rule: FaceRule, a: f64, b: f64, spec: MobilitySpec) -> FaceMobility {
    match rule {
        FaceRule::ArithmeticMean => FaceMobility {
            value: 0.5 * (mobility(a, spec) + mobility(b, spec)),
            d_left: 0.5 * mobility_derivative(a, spec),
            d_right: 0.5 * mobility_derivative(b, spec),
        },
        FaceRule::HarmonicMean => {
            let (fa, fb) = (mobility(a, spec), mobility(b, spec));
            let s = fa + fb;
            if s == 0.0 {
                return FaceMobility {
                    value: 0.0,
                    d_left: 0.0,
                    d_right: 0.0,
                };
            }
            FaceMobility {
                value: 2.0 * fa * fb / s,
                d_left: 2.0 * fb * fb / (s * s) * mobility_derivative(a, spec),
                d_right: 2.0 * fa * fa / (s * s) * mobility_derivative(b, spec),
            }
        }
        FaceRule::EntropicMean => entropic(a, b, spec),
    }
}

fn entropic(a: f64, b: f64, spec: MobilitySpec) -> FaceMobility {
    let zero = FaceMobility {
        value: 0.0,
        d_left: 0.0,
        d_right: 0.0,
    };
    if spec.delta == 0.0 && a.min(b) <= 0.0 {
        // ∫ds/f diverges across a dry point
        return zero;
    }
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let scale = a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
    let rel = (b - a).abs() / scale;

    let value = if rel <= NARROW {
        // F = (b - a)/I with I = half Σ w/f, so the width cancels exactly
        // nodes are summed in mirror pairs so swapping a and b is exact
        let g = |k: usize| 1.0 / mobility(mid + half * GL4_NODES[k], spec);
        let s = GL4_WEIGHTS[0] * (g(0) + g(3)) + GL4_WEIGHTS[1] * (g(1) + g(2));
        2.0 / s
    } else {
        match inverse_mobility_integral(a, b, spec) {
            Ok(i) => (b - a) / i,
            Err(_) => {
                log::warn!("entropic face mean fell back to the arithmetic mean at ({a}, {b})");
                return face_mobility(FaceRule::ArithmeticMean, a, b, spec);
            }
        }
    };

    if rel < DEGENERATE {
        let d = 0.5 * mobility_derivative(mid, spec);
        return FaceMobility {
            value,
            d_left: d,
            d_right: d,
        };
    }
    let integral = (b - a) / value;
    FaceMobility {
        value,
        d_left: (value / mobility(a, spec) - 1.0) / integral,
        d_right: (1.0 - value / mobility(b, spec)) / integral,
    }
}
