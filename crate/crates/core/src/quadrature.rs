//! Grundmann-Möller cubature on simplices.
//!
//! Used as an independent reference for the closed-form moment and
//! quadrature identities, and by the audit command.

use crate::vec3::{self, Vec3};

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// All compositions of `total` into `parts` non-negative integers.
fn compositions(total: usize, parts: usize, out: &mut Vec<Vec<usize>>) {
    fn rec(total: usize, parts: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 0..=total {
            prefix.push(first);
            rec(total - first, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    rec(total, parts, &mut Vec::new(), out);
}

/// Barycentric points and weights of the rule exact for polynomials up to
/// `degree` on an `n`-simplex. Weights sum to one.
pub fn simplex_rule(n: usize, degree: usize) -> Vec<(Vec<f64>, f64)> {
    let s = degree.saturating_sub(1).div_ceil(2);
    let d = 2 * s + 1;
    let mut rule = Vec::new();
    for i in 0..=s {
        let denom = (d + n - 2 * i) as f64;
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let w = sign * 2f64.powi(-2 * s as i32) * denom.powi(d as i32)
            / (factorial(i) * factorial(d + n - i))
            * factorial(n);
        let mut betas = Vec::new();
        compositions(s - i, n + 1, &mut betas);
        for beta in betas {
            let bary = beta.iter().map(|&b| (2 * b + 1) as f64 / denom).collect();
            rule.push((bary, w));
        }
    }
    rule
}

/// Integrates `f` over a tetrahedron with a rule of at least `degree`.
pub fn integrate_tet(p: &[Vec3; 4], degree: usize, f: impl Fn(Vec3) -> f64) -> f64 {
    let volume = vec3::tet_volume(p[0], p[1], p[2], p[3]).abs();
    let mut sum = 0.0;
    for (bary, w) in simplex_rule(3, degree) {
        let mut x = [0.0; 3];
        for (k, b) in bary.iter().enumerate() {
            x = vec3::add(x, vec3::scale(p[k], *b));
        }
        sum += w * f(x);
    }
    sum * volume
}

/// Integrates `f` over a triangle with a rule of at least `degree`.
pub fn integrate_triangle(p: &[Vec3; 3], degree: usize, f: impl Fn(Vec3) -> f64) -> f64 {
    let area = 0.5 * vec3::norm(vec3::cross(vec3::sub(p[1], p[0]), vec3::sub(p[2], p[0])));
    let mut sum = 0.0;
    for (bary, w) in simplex_rule(2, degree) {
        let mut x = [0.0; 3];
        for (k, b) in bary.iter().enumerate() {
            x = vec3::add(x, vec3::scale(p[k], *b));
        }
        sum += w * f(x);
    }
    sum * area
}
