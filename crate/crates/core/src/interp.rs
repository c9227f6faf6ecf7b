//! Left/right state interpolation from nodal gradients.
//!
//! All formulas act componentwise on primitive variables. `ḡ_j` is the mean
//! of the four nodal gradients of cell `j` and `ḡ_T` the mean over the three
//! nodes of face `T`.

use crate::euler::State;
use crate::vec3::{self, Vec3};

/// Gradients of the five primitive variables at one point.
pub type Grad5 = [Vec3; 5];

pub const ZERO_GRAD: Grad5 = [[0.0; 3]; 5];

/// Mean of nodal gradients over a set of nodes.
#[inline]
pub fn mean_gradient(nodes: &[usize], grads: &[Grad5]) -> Grad5 {
    let mut g = ZERO_GRAD;
    for &n in nodes {
        for k in 0..5 {
            g[k] = vec3::add(g[k], grads[n][k]);
        }
    }
    let s = 1.0 / nodes.len() as f64;
    g.map(|v| vec3::scale(v, s))
}

/// `ḡ_j` for a cell.
#[inline]
pub fn cell_mean_gradient(cell: &[usize; 4], grads: &[Grad5]) -> Grad5 {
    mean_gradient(cell, grads)
}

/// `w + g·dx` componentwise.
#[inline]
pub fn extrapolate(w: &State, g: &Grad5, dx: Vec3) -> State {
    let mut out = *w;
    for k in 0..5 {
        out[k] += vec3::dot(g[k], dx);
    }
    out
}

/// `w_j + ½(g + ḡ_j)·(x − x_j)`, with `g` the gradient at the target point.
#[inline]
pub fn ngqi_state(wj: &State, g_target: &Grad5, gbar_j: &Grad5, dx: Vec3) -> State {
    let mut out = *wj;
    for k in 0..5 {
        out[k] += 0.5 * (vec3::dot(g_target[k], dx) + vec3::dot(gbar_j[k], dx));
    }
    out
}

/// `w_j + ḡ_T·(x_T − x_j)`.
#[inline]
pub fn fang_state(wj: &State, gbar_t: &Grad5, dx: Vec3) -> State {
    extrapolate(wj, gbar_t, dx)
}

/// `w_j + ḡ_j·(x_T − x_j)`.
#[inline]
pub fn cang_state(wj: &State, gbar_j: &Grad5, dx: Vec3) -> State {
    extrapolate(wj, gbar_j, dx)
}

/// Linearity-preserving UMUSCL state on the `j` side of an interior face:
/// `κ(w_j + w'_k)/2 + (1−κ)(w_j + ḡ_T·(x_T−x_j))` with
/// `w'_k = w_k + ḡ_T·(2x_T − x_j − x_k)`. Swap `j` and `k` for the other side.
#[inline]
pub fn lp_umuscl_state(
    wj: &State,
    wk: &State,
    gbar_t: &Grad5,
    xj: Vec3,
    xk: Vec3,
    xt: Vec3,
    kappa: f64,
) -> State {
    let dj = vec3::sub(xt, xj);
    let dk = vec3::sub(vec3::add(xt, dj), xk);
    let mut out = [0.0; 5];
    for k in 0..5 {
        let wkp = wk[k] + vec3::dot(gbar_t[k], dk);
        let fang = wj[k] + vec3::dot(gbar_t[k], dj);
        out[k] = kappa * 0.5 * (wj[k] + wkp) + (1.0 - kappa) * fang;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_grad(rng: &mut ChaCha8Rng) -> Grad5 {
        std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0)))
    }

    #[test]
    fn zero_gradients_return_the_cell_value() {
        let w = [1.0, 0.2, 0.3, -0.1, 0.7];
        let dx = [0.1, -0.2, 0.05];
        assert_eq!(ngqi_state(&w, &ZERO_GRAD, &ZERO_GRAD, dx), w);
        assert_eq!(fang_state(&w, &ZERO_GRAD, dx), w);
        assert_eq!(cang_state(&w, &ZERO_GRAD, dx), w);
        let u = lp_umuscl_state(&w, &w, &ZERO_GRAD, [0.0; 3], [1.0, 0.0, 0.0], [0.5, 0.1, 0.0], 1.0 / 3.0);
        for k in 0..5 {
            assert!((u[k] - w[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn ngqi_is_mean_of_fang_and_cang() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let w: State = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            let gt = random_grad(&mut rng);
            let gj = random_grad(&mut rng);
            let dx = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let n = ngqi_state(&w, &gt, &gj, dx);
            let f = fang_state(&w, &gt, dx);
            let c = cang_state(&w, &gj, dx);
            for k in 0..5 {
                assert!((n[k] - 0.5 * (f[k] + c[k])).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn lp_umuscl_limits_and_linearity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let xj = [0.1, 0.2, 0.0];
        let xk = [0.6, 0.1, 0.3];
        let xt = [0.35, 0.2, 0.2];
        let g = random_grad(&mut rng);
        let w0: State = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let field = |x: Vec3| extrapolate(&w0, &g, x);
        let wj = field(xj);
        let wk = field(xk);
        // kappa = 0 is FANG
        let a = lp_umuscl_state(&wj, &wk, &g, xj, xk, xt, 0.0);
        assert_eq!(a, fang_state(&wj, &g, vec3::sub(xt, xj)));
        // a linear field is reproduced at the face for any kappa
        for kappa in [0.0, 1.0 / 3.0, 0.5, 1.0] {
            let l = lp_umuscl_state(&wj, &wk, &g, xj, xk, xt, kappa);
            let r = lp_umuscl_state(&wk, &wj, &g, xk, xj, xt, kappa);
            let exact = field(xt);
            for k in 0..5 {
                assert!((l[k] - exact[k]).abs() < 1e-14);
                assert!((r[k] - exact[k]).abs() < 1e-14);
            }
        }
    }
}
