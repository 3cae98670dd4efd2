//! Wigner small-d rotation matrices for a spin-j multiplet.

use crate::spin::HalfInt;

fn factorial(n: i32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * f64::from(k))
}

/// d^j_{m'm}(β) from Wigner's explicit sum.
pub fn small_d(j: HalfInt, m_prime: HalfInt, m: HalfInt, beta: f64) -> f64 {
    // Work with twice-values; every combination below is an integer.
    let (j2, mp2, m2) = (j.twice(), m_prime.twice(), m.twice());
    if mp2.abs() > j2 || m2.abs() > j2 {
        return 0.0;
    }
    let jpmp = (j2 + mp2) / 2;
    let jmmp = (j2 - mp2) / 2;
    let jpm = (j2 + m2) / 2;
    let jmm = (j2 - m2) / 2;
    let dm = (mp2 - m2) / 2;
    let prefactor =
        (factorial(jpmp) * factorial(jmmp) * factorial(jpm) * factorial(jmm)).sqrt();
    let (c, s) = ((beta / 2.0).cos(), (beta / 2.0).sin());

    let k_min = 0.max(-dm);
    let k_max = jpm.min(jmmp);
    let mut sum = 0.0;
    for k in k_min..=k_max {
        let denom = factorial(jpm - k) * factorial(k) * factorial(jmmp - k) * factorial(k + dm);
        let sign = if (k + dm) % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * c.powi(j2 - 2 * k - dm) * s.powi(2 * k + dm) / denom;
    }
    prefactor * sum
}

/// Population transfer matrix T[a][b] = |d^j_{m_a m_b}(β)|², rows and columns
/// ordered m = j, j−1, …, −j.
pub fn population_rotation(j: HalfInt, beta: f64) -> Vec<Vec<f64>> {
    let ms: Vec<HalfInt> = j.projections().collect();
    ms.iter()
        .map(|&mp| ms.iter().map(|&m| small_d(j, mp, m, beta).powi(2)).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn h(twice: i32) -> HalfInt {
        HalfInt::from_twice(twice)
    }

    #[test]
    fn spin_half_closed_form() {
        let beta = 0.731;
        assert_abs_diff_eq!(small_d(h(1), h(1), h(1), beta), (beta / 2.0).cos(), epsilon = 1e-15);
        assert_abs_diff_eq!(small_d(h(1), h(1), h(-1), beta), -(beta / 2.0).sin(), epsilon = 1e-15);
        assert_abs_diff_eq!(small_d(h(1), h(-1), h(1), beta), (beta / 2.0).sin(), epsilon = 1e-15);
        for row in population_rotation(h(1), PI / 2.0) {
            for x in row {
                assert_abs_diff_eq!(x, 0.5, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn spin_one_closed_form() {
        let beta: f64 = 1.234;
        let (c, s) = (beta.cos(), beta.sin());
        assert_abs_diff_eq!(small_d(h(2), h(2), h(2), beta), 0.5 * (1.0 + c), epsilon = 1e-14);
        assert_abs_diff_eq!(small_d(h(2), h(2), h(0), beta), -s / 2f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(small_d(h(2), h(0), h(0), beta), c, epsilon = 1e-14);
        assert_abs_diff_eq!(small_d(h(2), h(-2), h(2), beta), 0.5 * (1.0 - c), epsilon = 1e-14);
    }

    #[test]
    fn pi_rotation_reverses() {
        for j2 in 1..=6 {
            let t = population_rotation(h(j2), PI);
            let n = t.len();
            for a in 0..n {
                for b in 0..n {
                    let want = if a + b == n - 1 { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(t[a][b], want, epsilon = 1e-14);
                }
            }
        }
    }

    #[test]
    fn zero_rotation_is_identity() {
        let t = population_rotation(h(3), 0.0);
        for (a, row) in t.iter().enumerate() {
            for (b, x) in row.iter().enumerate() {
                assert_eq!(*x, if a == b { 1.0 } else { 0.0 });
            }
        }
    }
}
