//! Ideal-gas Euler state algebra: conversions, projected flux, Roe flux and
//! the primitive-variable flux Jacobian.
//!
//! Primitive states are `(ρ, u, v, w, p)`, conservative states
//! `(ρ, ρu, ρv, ρw, ρE)`, nondimensionalized so that the freestream has
//! `ρ = 1` and `a = 1`.

use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

use crate::vec3::{self, Vec3};

pub const GAMMA: f64 = 1.4;

pub type State = [f64; 5];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EulerError {
    #[error("unrealizable state: density {rho:e}, pressure {p:e}")]
    Unrealizable { rho: f64, p: f64 },
}

/// Primitive state `(ρ, u, v, w, p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prim(pub State);

/// Conservative state `(ρ, ρu, ρv, ρw, ρE)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cons(pub State);

impl Prim {
    pub fn new(rho: f64, vel: Vec3, p: f64) -> Self {
        Prim([rho, vel[0], vel[1], vel[2], p])
    }

    #[inline]
    pub fn rho(&self) -> f64 {
        self.0[0]
    }

    #[inline]
    pub fn vel(&self) -> Vec3 {
        [self.0[1], self.0[2], self.0[3]]
    }

    #[inline]
    pub fn p(&self) -> f64 {
        self.0[4]
    }

    /// Errors unless density and pressure are positive and finite.
    pub fn check(&self) -> Result<Self, EulerError> {
        let (rho, p) = (self.rho(), self.p());
        if rho > 0.0 && p > 0.0 && self.0.iter().all(|v| v.is_finite()) {
            Ok(*self)
        } else {
            Err(EulerError::Unrealizable { rho, p })
        }
    }

    pub fn sound_speed(&self) -> f64 {
        (GAMMA * self.p() / self.rho()).sqrt()
    }

    /// Specific total enthalpy `γp/(ρ(γ−1)) + |v|²/2`.
    pub fn enthalpy(&self) -> f64 {
        let v = self.vel();
        GAMMA * self.p() / (self.rho() * (GAMMA - 1.0)) + 0.5 * vec3::dot(v, v)
    }

    /// Nondimensional temperature `γp/ρ`.
    pub fn temperature(&self) -> f64 {
        GAMMA * self.p() / self.rho()
    }

    pub fn to_cons(&self) -> Cons {
        let [rho, u, v, w, p] = self.0;
        Cons([
            rho,
            rho * u,
            rho * v,
            rho * w,
            p / (GAMMA - 1.0) + 0.5 * rho * (u * u + v * v + w * w),
        ])
    }
}

impl Cons {
    /// Converts to primitives, rejecting nonpositive density or pressure.
    pub fn to_prim(&self) -> Result<Prim, EulerError> {
        let [rho, mu, mv, mw, e] = self.0;
        if !(rho > 0.0) {
            return Err(EulerError::Unrealizable { rho, p: f64::NAN });
        }
        let (u, v, w) = (mu / rho, mv / rho, mw / rho);
        let p = (GAMMA - 1.0) * (e - 0.5 * rho * (u * u + v * v + w * w));
        Prim([rho, u, v, w, p]).check()
    }
}

/// Flux projected on the unit normal `n`.
#[inline]
pub fn normal_flux(w: &Prim, n: Vec3) -> State {
    let [rho, u, v, ww, p] = w.0;
    let q = u * n[0] + v * n[1] + ww * n[2];
    let rh = GAMMA * p / (GAMMA - 1.0) + 0.5 * rho * (u * u + v * v + ww * ww);
    [
        rho * q,
        rho * u * q + p * n[0],
        rho * v * q + p * n[1],
        rho * ww * q + p * n[2],
        rh * q,
    ]
}

/// Roe flux settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoeOptions {
    /// Multiplier on the dissipation term, in (0, 1].
    pub dissipation: f64,
    /// Harten entropy fix on the acoustic waves.
    pub entropy_fix: bool,
}

impl Default for RoeOptions {
    fn default() -> Self {
        RoeOptions {
            dissipation: 1.0,
            entropy_fix: false,
        }
    }
}

static ENTROPY_FIX_ACTIVATIONS: AtomicU64 = AtomicU64::new(0);

/// Returns and resets the number of entropy-fix activations since the last call.
pub fn take_entropy_fix_count() -> u64 {
    ENTROPY_FIX_ACTIVATIONS.swap(0, Ordering::Relaxed)
}

#[inline]
fn harten(ws: f64, delta: f64) -> (f64, bool) {
    if ws < delta {
        ((ws * ws + delta * delta) / (2.0 * delta), true)
    } else {
        (ws, false)
    }
}

/// Roe approximate Riemann flux across unit normal `n` (pointing from L to R).
pub fn roe_flux(l: &Prim, r: &Prim, n: Vec3, opts: RoeOptions) -> Result<State, EulerError> {
    l.check()?;
    r.check()?;
    let fl = normal_flux(l, n);
    let fr = normal_flux(r, n);

    let rt = (r.rho() / l.rho()).sqrt();
    let den = 1.0 + rt;
    let rho = rt * l.rho();
    let vl = l.vel();
    let vr = r.vel();
    let vel = vec3::scale(vec3::add(vl, vec3::scale(vr, rt)), 1.0 / den);
    let h = (l.enthalpy() + rt * r.enthalpy()) / den;
    let ke = 0.5 * vec3::dot(vel, vel);
    let a2 = (GAMMA - 1.0) * (h - ke);
    if !(a2 > 0.0) {
        return Err(EulerError::Unrealizable { rho, p: a2 * rho / GAMMA });
    }
    let a = a2.sqrt();
    let qn = vec3::dot(vel, n);

    let drho = r.rho() - l.rho();
    let dp = r.p() - l.p();
    let dv = vec3::sub(vr, vl);
    let dqn = vec3::dot(dv, n);

    let mut ws1 = (qn - a).abs();
    let ws2 = qn.abs();
    let mut ws4 = (qn + a).abs();
    if opts.entropy_fix {
        let delta = 0.05 * (qn.abs() + a);
        let (w1, f1) = harten(ws1, delta);
        let (w4, f4) = harten(ws4, delta);
        ws1 = w1;
        ws4 = w4;
        let hits = f1 as u64 + f4 as u64;
        if hits > 0 {
            ENTROPY_FIX_ACTIVATIONS.fetch_add(hits, Ordering::Relaxed);
        }
    }

    let ldu1 = (dp - rho * a * dqn) / (2.0 * a2);
    let ldu2 = drho - dp / a2;
    let ldu4 = (dp + rho * a * dqn) / (2.0 * a2);
    let shear = vec3::sub(dv, vec3::scale(n, dqn));

    let mut diss = [0.0; 5];
    let r1 = [
        1.0,
        vel[0] - a * n[0],
        vel[1] - a * n[1],
        vel[2] - a * n[2],
        h - a * qn,
    ];
    let r2 = [1.0, vel[0], vel[1], vel[2], ke];
    let r3 = [
        0.0,
        shear[0],
        shear[1],
        shear[2],
        vec3::dot(vel, dv) - qn * dqn,
    ];
    let r4 = [
        1.0,
        vel[0] + a * n[0],
        vel[1] + a * n[1],
        vel[2] + a * n[2],
        h + a * qn,
    ];
    for k in 0..5 {
        diss[k] = ws1 * ldu1 * r1[k] + ws2 * ldu2 * r2[k] + ws2 * rho * r3[k] + ws4 * ldu4 * r4[k];
    }
    let mut f = [0.0; 5];
    for k in 0..5 {
        f[k] = 0.5 * (fl[k] + fr[k] - opts.dissipation * diss[k]);
    }
    Ok(f)
}

/// `|q_n| + a` at the Roe average of `l` and `r` (unit normal `n`).
pub fn roe_spectral_radius(l: &Prim, r: &Prim, n: Vec3) -> f64 {
    let rt = (r.rho() / l.rho()).sqrt();
    let den = 1.0 + rt;
    let vel = vec3::scale(vec3::add(l.vel(), vec3::scale(r.vel(), rt)), 1.0 / den);
    let h = (l.enthalpy() + rt * r.enthalpy()) / den;
    let a2 = (GAMMA - 1.0) * (h - 0.5 * vec3::dot(vel, vel));
    vec3::dot(vel, n).abs() + a2.max(0.0).sqrt()
}

/// `∂f/∂w` of the projected flux with respect to primitives, normal held fixed.
pub fn flux_jacobian_prim(w: &Prim, n: Vec3) -> [[f64; 5]; 5] {
    let [rho, u, v, ww, p] = w.0;
    let vel = [u, v, ww];
    let q = vec3::dot(vel, n);
    let k2 = u * u + v * v + ww * ww;
    let rho_h = GAMMA * p / (GAMMA - 1.0) + 0.5 * rho * k2;
    let mut j = [[0.0; 5]; 5];
    j[0] = [q, rho * n[0], rho * n[1], rho * n[2], 0.0];
    for a in 0..3 {
        let row = &mut j[1 + a];
        row[0] = vel[a] * q;
        for d in 0..3 {
            row[1 + d] = rho * vel[a] * n[d];
        }
        row[1 + a] += rho * q;
        row[4] = n[a];
    }
    j[4][0] = 0.5 * k2 * q;
    for d in 0..3 {
        j[4][1 + d] = rho_h * n[d] + rho * vel[d] * q;
    }
    j[4][4] = GAMMA * q / (GAMMA - 1.0);
    j
}

/// `(∂f/∂w)·dw` without forming the matrix.
#[inline]
pub fn flux_jacobian_apply(w: &Prim, n: Vec3, dw: &State) -> State {
    let [rho, u, v, ww, p] = w.0;
    let vel = [u, v, ww];
    let dv = [dw[1], dw[2], dw[3]];
    let q = vec3::dot(vel, n);
    let dq = vec3::dot(dv, n);
    let k2 = vec3::dot(vel, vel);
    let rho_h = GAMMA * p / (GAMMA - 1.0) + 0.5 * rho * k2;
    let d_rho_h = GAMMA * dw[4] / (GAMMA - 1.0) + 0.5 * dw[0] * k2 + rho * vec3::dot(vel, dv);
    let mut out = [0.0; 5];
    out[0] = dw[0] * q + rho * dq;
    for a in 0..3 {
        out[1 + a] = (dw[0] * vel[a] + rho * dv[a]) * q + rho * vel[a] * dq + dw[4] * n[a];
    }
    out[4] = d_rho_h * q + rho_h * dq;
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit(v: Vec3) -> Vec3 {
        vec3::normalize(v)
    }

    prop_compose! {
        fn prim()(rho in 0.2f64..3.0, u in -2.0f64..2.0, v in -2.0f64..2.0,
                  w in -2.0f64..2.0, p in 0.2f64..3.0) -> Prim {
            Prim([rho, u, v, w, p])
        }
    }

    prop_compose! {
        fn normal()(x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0)
            -> Vec3 {
            let n = [x, y, z];
            if vec3::norm(n) < 1e-3 { [1.0, 0.0, 0.0] } else { unit(n) }
        }
    }

    #[test]
    fn freestream_total_energy() {
        let w = Prim([1.0, 0.1, 0.0, 0.0, 1.0 / GAMMA]);
        let e = w.to_cons().0[4];
        let expected = 1.0 / (GAMMA * (GAMMA - 1.0)) + 0.005;
        assert!((e - expected).abs() < 1e-15);
        assert!((w.sound_speed() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unrealizable_states_are_rejected() {
        assert!(Cons([0.0, 0.0, 0.0, 0.0, 1.0]).to_prim().is_err());
        assert!(Cons([-1.0, 0.0, 0.0, 0.0, 1.0]).to_prim().is_err());
        assert!(Cons([1.0, 2.0, 0.0, 0.0, 1.0]).to_prim().is_err());
        let bad = Prim([1.0, 0.0, 0.0, 0.0, -0.1]);
        let good = Prim([1.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(roe_flux(&bad, &good, [1.0, 0.0, 0.0], RoeOptions::default()).is_err());
    }

    #[test]
    fn stagnant_and_simple_fluxes() {
        let n = unit([1.0, 2.0, 2.0]);
        let f = normal_flux(&Prim([1.3, 0.0, 0.0, 0.0, 0.7]), n);
        assert_eq!(f[0], 0.0);
        assert_eq!(f[4], 0.0);
        for d in 0..3 {
            assert!((f[1 + d] - 0.7 * n[d]).abs() < 1e-15);
        }
        let f = normal_flux(&Prim([1.0, 1.0, 0.0, 0.0, 1.0 / GAMMA]), [1.0, 0.0, 0.0]);
        assert_eq!(f[0], 1.0);
        // zero-pressure gas: flux is odd in the normal
        let w = Prim([1.2, 0.3, -0.4, 0.5, 0.0]);
        let a = normal_flux(&w, n);
        let b = normal_flux(&w, vec3::scale(n, -1.0));
        for k in 0..5 {
            assert!((a[k] + b[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn freestream_has_no_dissipation() {
        let w = Prim([1.0, 0.3, 0.0, 0.0, 1.0 / GAMMA]);
        for delta in [0.1, 0.5, 1.0] {
            let opts = RoeOptions {
                dissipation: delta,
                entropy_fix: true,
            };
            let f = roe_flux(&w, &w, unit([1.0, 1.0, 0.0]), opts).unwrap();
            let e = normal_flux(&w, unit([1.0, 1.0, 0.0]));
            for k in 0..5 {
                assert!((f[k] - e[k]).abs() < 1e-15);
            }
        }
    }

    proptest! {
        #[test]
        fn round_trip(w in prim()) {
            let back = w.to_cons().to_prim().unwrap();
            for k in 0..5 {
                prop_assert!((back.0[k] - w.0[k]).abs() <= 1e-14 * w.0[k].abs().max(1.0) * 10.0);
            }
        }

        #[test]
        fn roe_consistency(w in prim(), n in normal()) {
            let f = roe_flux(&w, &w, n, RoeOptions::default()).unwrap();
            let e = normal_flux(&w, n);
            for k in 0..5 {
                prop_assert!((f[k] - e[k]).abs() <= 1e-13 * e[k].abs().max(1.0));
            }
        }

        #[test]
        fn roe_conservation(l in prim(), r in prim(), n in normal(), fix in any::<bool>()) {
            let opts = RoeOptions { dissipation: 1.0, entropy_fix: fix };
            let a = roe_flux(&l, &r, n, opts).unwrap();
            let b = roe_flux(&r, &l, vec3::scale(n, -1.0), opts).unwrap();
            for k in 0..5 {
                prop_assert!((a[k] + b[k]).abs() <= 1e-12 * a[k].abs().max(1.0));
            }
        }

        #[test]
        fn supersonic_flow_is_fully_upwinded(rho_l in 0.5f64..2.0, rho_r in 0.5f64..2.0,
                                             p_l in 0.5f64..1.0, p_r in 0.5f64..1.0,
                                             n in normal(), extra in 0.1f64..1.0) {
            let speed = 2.5 + extra;
            let l = Prim::new(rho_l, vec3::scale(n, speed), p_l);
            let r = Prim::new(rho_r, vec3::scale(n, speed), p_r);
            prop_assume!(vec3::dot(l.vel(), n) > l.sound_speed() && vec3::dot(r.vel(), n) > r.sound_speed());
            let f = roe_flux(&l, &r, n, RoeOptions::default()).unwrap();
            let e = normal_flux(&l, n);
            for k in 0..5 {
                prop_assert!((f[k] - e[k]).abs() <= 1e-12 * e[k].abs().max(1.0));
            }
        }

        #[test]
        fn jacobian_matches_central_differences(w in prim(), n in normal()) {
            let j = flux_jacobian_prim(&w, n);
            let h = 1e-6;
            for c in 0..5 {
                let mut p = w;
                let mut m = w;
                p.0[c] += h;
                m.0[c] -= h;
                let fp = normal_flux(&p, n);
                let fm = normal_flux(&m, n);
                for k in 0..5 {
                    let fd = (fp[k] - fm[k]) / (2.0 * h);
                    prop_assert!((fd - j[k][c]).abs() < 1e-6 * j[k][c].abs().max(1.0));
                }
            }
        }

        #[test]
        fn jacobian_directional_derivative_is_second_order(w in prim(), n in normal(),
                                                            d in prop::array::uniform5(-1.0f64..1.0)) {
            let j = flux_jacobian_prim(&w, n);
            let f0 = normal_flux(&w, n);
            let err = |eps: f64| {
                let mut p = w;
                for c in 0..5 { p.0[c] += eps * d[c]; }
                let f = normal_flux(&p, n);
                (0..5).map(|k| {
                    let lin: f64 = (0..5).map(|c| j[k][c] * d[c]).sum();
                    (f[k] - f0[k] - eps * lin).abs()
                }).fold(0.0, f64::max)
            };
            let (e1, e2) = (err(1e-2), err(5e-3));
            // the remainder is quadratic in the step (cubic terms are small)
            prop_assert!(e1 < 1e-12 || (e1 / e2 > 3.0 && e1 / e2 < 5.0), "{e1} {e2}");
        }
    }

    #[test]
    fn jacobian_mass_row_and_stagnant_energy_entry() {
        let w = Prim([1.4, 0.2, -0.3, 0.1, 0.9]);
        let n = unit([0.3, 0.4, 1.0]);
        let j = flux_jacobian_prim(&w, n);
        let q = vec3::dot(w.vel(), n);
        let expected = [q, 1.4 * n[0], 1.4 * n[1], 1.4 * n[2], 0.0];
        for c in 0..5 {
            assert!((j[0][c] - expected[c]).abs() < 1e-15);
        }
        let j = flux_jacobian_prim(&Prim([1.0, 0.0, 0.0, 0.0, 1.0]), n);
        assert_eq!(j[4][4], 0.0);
    }

    #[test]
    fn entropy_fix_activations_are_counted() {
        take_entropy_fix_count();
        // sonic point: q ≈ a on the right-running acoustic wave
        let l = Prim([1.0, 0.99, 0.0, 0.0, 1.0 / GAMMA]);
        let r = Prim([1.0, 1.01, 0.0, 0.0, 1.0 / GAMMA]);
        let opts = RoeOptions {
            dissipation: 1.0,
            entropy_fix: true,
        };
        roe_flux(&l, &r, [1.0, 0.0, 0.0], opts).unwrap();
        assert!(take_entropy_fix_count() >= 1);
    }

    #[test]
    fn jacobian_apply_matches_matrix() {
        let w = Prim([1.3, 0.4, -0.2, 0.7, 0.9]);
        let n = vec3::normalize([0.3, -1.0, 0.4]);
        let dw = [0.1, -0.3, 0.25, 0.05, -0.2];
        let j = flux_jacobian_prim(&w, n);
        let got = flux_jacobian_apply(&w, n, &dw);
        for r in 0..5 {
            let want: f64 = (0..5).map(|c| j[r][c] * dw[c]).sum();
            assert!((got[r] - want).abs() < 1e-14);
        }
    }
}
