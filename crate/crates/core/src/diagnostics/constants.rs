use serde::{Deserialize, Serialize};

use super::{alpha_entropy_integral, entropy_integral, h1_sq, mass, DiagnosticsSeries};
use crate::error::{Error, Result};
use crate::mobility::{check_alpha, MobilitySpec};
use crate::model::{FilmState, Forcing, Params, PeriodicGrid};

/// Exponent of the Poincaré/interpolation chain feeding `c1`, `c2`, `c4`:
/// the one matching the `M^6` weight in `c2`.
pub const CHAIN_P: f64 = 6.0;

/// The Poincaré/interpolation constants at one exponent `p` (with `r = 2`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BChain {
    pub p: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub b4: f64,
    pub b5: f64,
}

/// `b1 = |Ω|^p/(p 2^{p-1})`, `b2 = 2^{ap}` with `a = 1/2 - 1/p`,
/// `b3 = b1 |Ω|^{(2-p)/p}` for `p <= 2` and `b1^{(p+2)/2} b2` otherwise,
/// `b4 = 2^{p-1} b3`, `b5 = (2/|Ω|)^{p-1}`.
pub fn b_chain(p: f64, omega: f64) -> BChain {
    let b1 = omega.powf(p) / (p * 2f64.powf(p - 1.0));
    let a = 0.5 - 1.0 / p;
    let b2 = 2f64.powf(a * p);
    let b3 = if p <= 2.0 {
        b1 * omega.powf((2.0 - p) / p)
    } else {
        b1.powf((p + 2.0) / 2.0) * b2
    };
    BChain {
        p,
        b1,
        b2,
        b3,
        b4: 2f64.powf(p - 1.0) * b3,
        b5: (2.0 / omega).powf(p - 1.0),
    }
}

/// Constant name with the formula used to evaluate it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub name: String,
    pub value: f64,
    pub formula: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AprioriConstants {
    pub omega: f64,
    /// Mass of the (lifted) initial data.
    pub m: f64,
    pub a0: f64,
    pub b: BChain,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
    /// `∫ (h0_x² + 2 c3/a0 G(h0))`.
    pub v0: f64,
    pub k1: f64,
    pub big_c: f64,
    pub k3_local: f64,
    /// `(1/(4 c6)) min{1, v0^-2}` at the configured δ, ε.
    pub t_loc: f64,
    /// `9/10` of `t_loc`, the time used for the limit problem.
    pub t_loc_limit: f64,
    pub k_uniform: f64,
    pub k3_uniform: f64,
    pub alpha: Option<f64>,
    /// Chains used by the α-entropy constants (`p = α + 2` and `p = 8 - α`).
    pub b_alpha_low: Option<BChain>,
    pub b_alpha_high: Option<BChain>,
    /// `d1, d2, d3` for α > 0; `e1, e2, e3` for α < 0.
    pub d1: Option<f64>,
    pub d2: Option<f64>,
    pub d3: Option<f64>,
    pub v_alpha: Option<f64>,
    pub k_alpha: Option<f64>,
    pub t_loc_alpha: Option<f64>,
    pub provenance: Vec<Provenance>,
}

fn prov(list: &mut Vec<Provenance>, name: &str, value: f64, formula: &str) {
    list.push(Provenance {
        name: name.to_string(),
        value,
        formula: formula.to_string(),
    });
}

/// Evaluates the full constant chain at the configured δ, ε for the
/// initial state `h0` (pass the lifted data).
pub fn apriori_constants(
    params: &Params,
    forcing: &Forcing,
    grid: &PeriodicGrid,
    h0: &FilmState,
    alpha: Option<f64>,
) -> Result<AprioriConstants> {
    params.validate()?;
    if let Some(a) = alpha {
        check_alpha(a)?;
    }
    let omega = grid.length();
    let m = mass(h0, grid);
    if !(m > 0.0) {
        return Err(Error::ZeroMass(m));
    }
    let (a0, a1, a2, a3, delta) = (params.a0, params.a1, params.a2, params.a3, params.delta);
    let wp_inf = forcing.sup_norm_w_prime();
    let wp_2 = forcing.l2_norm_w_prime(grid);
    let wpp_inf = forcing.sup_norm_w_double_prime();
    let w_inf = forcing.sup_norm_w();
    let spec = MobilitySpec::new(delta, params.epsilon);

    let mut pv = Vec::new();
    let b = b_chain(CHAIN_P, omega);
    prov(&mut pv, "p", b.p, "exponent of the chain feeding c1, c2, c4");
    prov(&mut pv, "b1", b.b1, "|Ω|^p / (p 2^(p-1))");
    prov(&mut pv, "b2", b.b2, "(1 + r/2)^(a p), r = 2, a = 1/2 - 1/p");
    prov(&mut pv, "b3", b.b3, "b1 |Ω|^((2-p)/p) if p <= 2, else b1^((p+2)/2) b2");
    prov(&mut pv, "b4", b.b4, "2^(p-1) b3");
    prov(&mut pv, "b5", b.b5, "(2/|Ω|)^(p-1)");

    let c1 = b.b2 * b.b2 / 8.0 + b.b4 / 2.0;
    let c2 = m.powi(6) * b.b5 / 2.0;
    let c3 = a1 * a1 / (2.0 * a0) + delta * a1.abs();
    let c4 = a1 * a1 / a0 * c1
        + a2 * a2 / a0 * wp_inf * wp_inf * b.b4
        + a1 * a1 / a0 * c2
        + a2 * a2 / a0 * wp_inf * wp_inf * b.b5 * m.powi(3)
        + delta * a2 * a2 / a0 * wp_2 * wp_2;
    let c5 = a1.abs() + a2.abs() * wp_2;
    let c6 = 2.0 * c3 * c5 / a0 + 2.0 * c4;
    prov(&mut pv, "c1", c1, "b2^2/8 + b4/2");
    prov(&mut pv, "c2", c2, "M^6 b5/2");
    prov(&mut pv, "c3", c3, "a1^2/(2 a0) + δ |a1|");
    prov(
        &mut pv,
        "c4",
        c4,
        "(a1^2/a0) c1 + (a2^2/a0) |w'|∞^2 b4 + (a1^2/a0) c2 + (a2^2/a0) |w'|∞^2 b5 M^3 + δ (a2^2/a0) |w'|_2^2",
    );
    prov(&mut pv, "c5", c5, "|a1| + |a2| |w'|_2");
    prov(&mut pv, "c6", c6, "2 c3 c5/a0 + 2 c4");

    let g0 = entropy_integral(h0, spec, grid)?;
    let hx0 = h1_sq(h0, grid);
    let v0 = hx0 + 2.0 * c3 / a0 * g0;
    let t_loc = 1.0 / (4.0 * c6) * 1f64.min(v0.powi(-2));
    let k1 = 2f64.sqrt() * v0.max(1.0);
    let big_c = omega * omega * k1.sqrt() + 2.0 * m;
    let k3_local = (a2 * a3).abs() * wp_inf * big_c;
    prov(&mut pv, "v0", v0, "∫ (h0_x^2 + 2 c3/a0 G(h0))");
    prov(&mut pv, "T_loc", t_loc, "(1/(4 c6)) min{1, v0^-2}");
    prov(&mut pv, "T_loc_limit", 0.9 * t_loc, "(9/10) T_loc");
    prov(&mut pv, "K1", k1, "sqrt(2) max{1, v0}");
    prov(&mut pv, "C", big_c, "|Ω|^2 sqrt(K1) + 2 M");
    prov(&mut pv, "K3_local", k3_local, "|a2 a3| |w'|∞ C");

    let s = a0 + a1;
    let k3_uniform = if s <= 0.0 {
        a2.abs() * w_inf * m
    } else {
        a2.abs() * w_inf * m + m * m * (2.0 * 6f64.sqrt() * s.powf(1.5) / (3.0 * a0.sqrt()) + s / (2.0 * omega))
    };
    prov(&mut pv, "K_uniform", k3_local, "|a2 a3| |w'|∞ C");
    prov(
        &mut pv,
        "K3_uniform",
        k3_uniform,
        "|a2| |w|∞ M, plus M^2 (2 sqrt(6) (a0+a1)^(3/2)/(3 sqrt(a0)) + (a0+a1)/(2|Ω|)) when a0 + a1 > 0",
    );

    let mut out = AprioriConstants {
        omega,
        m,
        a0,
        b,
        c1,
        c2,
        c3,
        c4,
        c5,
        c6,
        v0,
        k1,
        big_c,
        k3_local,
        t_loc,
        t_loc_limit: 0.9 * t_loc,
        k_uniform: k3_local,
        k3_uniform,
        alpha,
        b_alpha_low: None,
        b_alpha_high: None,
        d1: None,
        d2: None,
        d3: None,
        v_alpha: None,
        k_alpha: None,
        t_loc_alpha: None,
        provenance: Vec::new(),
    };

    if let Some(alpha) = alpha {
        let lo = b_chain(alpha + 2.0, omega);
        let hi = b_chain(8.0 - alpha, omega);
        let (d1, d2, names) = if alpha > 0.0 {
            let s1 = 3.0 * a1 * a1 / (2.0 * a0 * alpha * (1.0 - alpha));
            let t1 = a2.abs() * wpp_inf / (1.0 + alpha);
            let s2 = 6.0 * a1.powi(4) / (a0.powi(3) * alpha * (1.0 - alpha));
            let t2 = 2.0 * a2 * a2 / a0 * wp_inf * wp_inf;
            (
                lo.b4 * (s1 + t1) + lo.b5 * (s1 * m.powf(alpha + 2.0) + t1 * m.powf(alpha + 1.0)),
                hi.b4 * (s2 + t2) + hi.b5 * (s2 * m.powf(8.0 - alpha) + t2 * m.powi(3)),
                [
                    ("d1", "b4 (A + B) + b5 (A M^(α+2) + B M^(α+1)), A = 3a1^2/(2 a0 α(1-α)), B = |a2| |w''|∞/(1+α), p = α+2"),
                    ("d2", "b4 (C + D) + b5 (C M^(8-α) + D M^3), C = 6 a1^4/(a0^3 α(1-α)), D = 2 a2^2 |w'|∞^2/a0, p = 8-α"),
                    ("d3", "d1 + d2"),
                ],
            )
        } else {
            let s1 = a1 * a1 * (1.0 - alpha) / (2.0 * a0 * (1.0 + 2.0 * alpha) * (1.0 + alpha).powi(2));
            let t1 = a2.abs() * wpp_inf / (1.0 + alpha);
            let s2 = 36.0 * a1.powi(4) / (a0.powi(3) * (1.0 + 2.0 * alpha) * (1.0 - alpha));
            let t2 = 2.0 * a2 * a2 / a0 * wp_inf * wp_inf;
            (
                lo.b4 * (s1 + t1) + lo.b5 * (s1 * m.powf(alpha + 2.0) + t1 * m.powf(alpha + 1.0)),
                hi.b4 * (s2 + t2) + hi.b5 * (s2 * m.powf(8.0 - alpha) + t2 * m.powi(3)),
                [
                    ("e1", "b4 (A + B) + b5 (A M^(α+2) + B M^(α+1)), A = a1^2(1-α)/(2 a0 (1+2α)(1+α)^2), B = |a2| |w''|∞/(1+α), p = α+2"),
                    ("e2", "b4 (C + D) + b5 (C M^(8-α) + D M^3), C = 36 a1^4/(a0^3 (1+2α)(1-α)), D = 2 a2^2 |w'|∞^2/a0, p = 8-α"),
                    ("e3", "e1 + e2"),
                ],
            )
        };
        let d3 = d1 + d2;
        let ga = alpha_entropy_integral(h0, alpha, params.epsilon, grid)?;
        let v_alpha = hx0 + ga;
        let t_alpha = 1.0 / (d3 * (6.0 - alpha)) * 1f64.min(v_alpha.powf(-(6.0 - alpha) / 2.0));
        let k_alpha = 4f64.powf(1.0 / (6.0 - alpha)) * v_alpha.max(1.0);
        prov(&mut pv, names[0].0, d1, names[0].1);
        prov(&mut pv, names[1].0, d2, names[1].1);
        prov(&mut pv, names[2].0, d3, names[2].1);
        prov(&mut pv, "v_alpha", v_alpha, "∫ (h0_x^2 + G^(α)(h0))");
        prov(&mut pv, "K_alpha", k_alpha, "4^(1/(6-α)) max{1, v_alpha}");
        prov(
            &mut pv,
            "T_loc_alpha",
            t_alpha,
            "(1/(d3 (6-α))) min{1, v_alpha^(-(6-α)/2)}",
        );
        out.b_alpha_low = Some(lo);
        out.b_alpha_high = Some(hi);
        out.d1 = Some(d1);
        out.d2 = Some(d2);
        out.d3 = Some(d3);
        out.v_alpha = Some(v_alpha);
        out.k_alpha = Some(k_alpha);
        out.t_loc_alpha = Some(t_alpha);
    }
    out.provenance = pv;
    Ok(out)
}

/// Iterated existence times `T_{n+1} = T_n + 9/(40 c6) min{1, v(T_n)^-2}`
/// with `v = ∫ h_x² + 2 c3/a0 ∫ G(h)` read from the latest series row at or
/// before `T_n`. Returns `T_1, T_2, ...` up to `segments` entries or until the
/// series ends.
pub fn continuation_times(series: &DiagnosticsSeries, constants: &AprioriConstants, segments: usize) -> Vec<f64> {
    let mut out = Vec::new();
    let Some(&t0) = series.t.first() else { return out };
    let t_last = *series.t.last().unwrap();
    let mut tn = t0;
    let mut idx = 0;
    for _ in 0..segments {
        while idx + 1 < series.len() && series.t[idx + 1] <= tn {
            idx += 1;
        }
        let v = series.h1_sq[idx] + 2.0 * constants.c3 / constants.a0 * series.entropy_g[idx];
        if !v.is_finite() {
            break;
        }
        tn += 9.0 / (40.0 * constants.c6) * 1f64.min(v.powi(-2));
        out.push(tn);
        if tn > t_last {
            break;
        }
    }
    out
}
