//! Isotropic electron-nuclear spin Hamiltonian in frequency units (MHz).

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::eigen::HermitianMatrix;
use crate::error::{Error, Result};
use crate::spin::{Label, SpinSystem};

/// ⟨m+1|J+|m⟩ = sqrt(j(j+1) − m(m+1)).
fn raising(j: f64, m: f64) -> f64 {
    (j * (j + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
}

/// H/h = ν_e·Sz − ν_n·Iz + A·(Sz·Iz + (S+I− + S−I+)/2) in the product basis of
/// [`SpinSystem::basis`].
pub fn build_hamiltonian(sys: &SpinSystem, field: f64) -> Result<HermitianMatrix> {
    if !(field.is_finite() && field >= 0.0) {
        return Err(Error::invalid("field", format!("{field} T must be finite and non-negative")));
    }
    let nu_e = sys.nu_e(field);
    let nu_n = sys.nu_n(field);
    let a = sys.hyperfine_a();
    let (s, i) = (sys.s(), sys.i());
    let basis = sys.basis();
    let mut h = HermitianMatrix::zeros(basis.len());

    for (col, label) in basis.iter().enumerate() {
        let ms = label.ms.value();
        let mi = label.mi.value();
        h[(col, col)] = Complex64::new(nu_e * ms - nu_n * mi + a * ms * mi, 0.0);

        // S+ I− couples (mS, mI) to (mS+1, mI−1); its transpose is S− I+.
        let target = Label::new(label.ms.step(1), label.mi.step(-1));
        if let Some(row) = sys.basis_index(target) {
            let elem = 0.5 * a * raising(s, ms) * raising(i, -mi);
            h[(row, col)] = Complex64::new(elem, 0.0);
            h[(col, row)] = Complex64::new(elem, 0.0);
        }
    }
    Ok(h)
}

/// High-field energies E(mS, mI) = ν_e·mS − ν_n·mI + A·mS·mI.
pub fn first_order_energies(sys: &SpinSystem, field: f64) -> BTreeMap<Label, f64> {
    let nu_e = sys.nu_e(field);
    let nu_n = sys.nu_n(field);
    let a = sys.hyperfine_a();
    sys.basis()
        .into_iter()
        .map(|l| {
            let (ms, mi) = (l.ms.value(), l.mi.value());
            (l, nu_e * ms - nu_n * mi + a * ms * mi)
        })
        .collect()
}

/// Zero-field eigenvalues A/2·[F(F+1) − S(S+1) − I(I+1)], each repeated 2F+1 times, ascending.
pub fn zero_field_energies(sys: &SpinSystem) -> Vec<f64> {
    let (s, i) = (sys.s(), sys.i());
    let a = sys.hyperfine_a();
    let f_min2 = (sys.electron_spin().twice() - sys.nuclear_spin().twice()).abs();
    let f_max2 = sys.electron_spin().twice() + sys.nuclear_spin().twice();
    let mut out = Vec::with_capacity(sys.dim());
    for f2 in (f_min2..=f_max2).step_by(2) {
        let f = f64::from(f2) / 2.0;
        let e = 0.5 * a * (f * (f + 1.0) - s * (s + 1.0) - i * (i + 1.0));
        out.extend(std::iter::repeat_n(e, f2 as usize + 1));
    }
    out.sort_by(f64::total_cmp);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::diagonalize;
    use crate::spin::HalfInt;
    use approx::assert_abs_diff_eq;

    fn n14() -> SpinSystem {
        SpinSystem::new(1.5, 1.0, 2.00087, 3.0747, 15.76).unwrap()
    }

    #[test]
    fn decoupled_zeeman_is_diagonal() {
        let sys = n14().with_hyperfine(0.0);
        let h = build_hamiltonian(&sys, 8.57).unwrap();
        let fo = first_order_energies(&sys, 8.57);
        for (k, label) in sys.basis().iter().enumerate() {
            for j in 0..sys.dim() {
                if j != k {
                    assert_eq!(h[(j, k)].norm(), 0.0);
                }
            }
            assert_eq!(h[(k, k)].re, fo[label]);
        }
    }

    #[test]
    fn hermitian_and_traceless() {
        let h = build_hamiltonian(&n14(), 3.3).unwrap();
        assert_eq!(h.max_asymmetry(), 0.0);
        assert_abs_diff_eq!(h.trace(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn coupling_only_between_flip_flop_partners() {
        let sys = n14();
        let h = build_hamiltonian(&sys, 1.0).unwrap();
        let basis = sys.basis();
        for (r, lr) in basis.iter().enumerate() {
            for (c, lc) in basis.iter().enumerate() {
                if r == c || h[(r, c)].norm() == 0.0 {
                    continue;
                }
                let dms = lr.ms.twice() - lc.ms.twice();
                let dmi = lr.mi.twice() - lc.mi.twice();
                assert_eq!(dms, -dmi);
                assert_eq!(dms.abs(), 2);
            }
        }
    }

    #[test]
    fn adjacent_electron_spacing_is_nu_e() {
        let sys = n14();
        let fo = first_order_energies(&sys, 8.57);
        let up = fo[&Label::new(HalfInt::from_twice(3), HalfInt::ZERO)];
        let down = fo[&Label::new(HalfInt::from_twice(1), HalfInt::ZERO)];
        // 240 GHz operating point.
        assert!((up - down - 240_000.0).abs() < 5.0);
    }

    #[test]
    fn zero_field_matches_coupled_multiplets() {
        for (s, i) in [(0.5, 0.5), (1.5, 1.0), (1.0, 0.5), (2.0, 1.5)] {
            let sys = SpinSystem::new(s, i, 2.0, 3.0, 15.76).unwrap();
            let eig = diagonalize(&build_hamiltonian(&sys, 0.0).unwrap()).unwrap();
            for (got, want) in eig.values.iter().zip(zero_field_energies(&sys)) {
                assert_abs_diff_eq!(*got, want, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn zero_field_formula_n14() {
        // F = 1/2, 3/2, 5/2 with A·{-5/2, -1, 3/2}.
        let e = zero_field_energies(&n14());
        assert_abs_diff_eq!(e[0], -2.5 * 15.76, epsilon = 1e-12);
        assert_abs_diff_eq!(e[2], -15.76, epsilon = 1e-12);
        assert_abs_diff_eq!(e[11], 1.5 * 15.76, epsilon = 1e-12);
    }

    #[test]
    fn nmr_line_at_top_manifold() {
        let fo = first_order_energies(&n14(), 8.57);
        let e = |ms2, mi2| fo[&Label::new(HalfInt::from_twice(ms2), HalfInt::from_twice(mi2))];
        let line = e(3, -2) - e(3, 0);
        assert!((line - 2.7).abs() < 0.15, "{line}");
    }
}
