//! Independent oracles: the Hamiltonian from Kronecker products of spin
//! matrices, diagonalized by nalgebra, and Boltzmann bookkeeping by label.
#![allow(dead_code)]

pub mod props;

use nalgebra::{DMatrix, SymmetricEigen};

pub const MU_B_OVER_H: f64 = 13_996.244_936_1;
pub const H_OVER_KB: f64 = 4.799_243_073_366_221e-5;

/// Projections of spin `j`, descending.
pub fn projections(j: f64) -> Vec<f64> {
    let n = (2.0 * j).round() as usize + 1;
    (0..n).map(|k| j - k as f64).collect()
}

fn sz(j: f64) -> DMatrix<f64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_vec(projections(j)))
}

fn s_plus(j: f64) -> DMatrix<f64> {
    let m = projections(j);
    let n = m.len();
    let mut out = DMatrix::zeros(n, n);
    for c in 1..n {
        out[(c - 1, c)] = (j * (j + 1.0) - m[c] * (m[c] + 1.0)).sqrt();
    }
    out
}

/// H/h in MHz on the product basis (mS descending, then mI descending).
pub fn hamiltonian(s: f64, i: f64, g: f64, gamma_n: f64, a: f64, field: f64) -> DMatrix<f64> {
    let (es, ei) = (DMatrix::identity(projections(s).len(), projections(s).len()), DMatrix::identity(projections(i).len(), projections(i).len()));
    let (szm, izm) = (sz(s), sz(i));
    let (sp, ip) = (s_plus(s), s_plus(i));
    let (sm, im) = (sp.transpose(), ip.transpose());
    let nu_e = g * MU_B_OVER_H * field;
    let nu_n = gamma_n * field;
    szm.kronecker(&ei) * nu_e - es.kronecker(&izm) * nu_n
        + (szm.kronecker(&izm) + (sp.kronecker(&im) + sm.kronecker(&ip)) * 0.5) * a
}

/// One oracle level: energy and dominant product label (mS, mI).
#[derive(Debug, Clone, Copy)]
pub struct OracleLevel {
    pub energy: f64,
    pub ms: f64,
    pub mi: f64,
}

pub fn oracle_levels(s: f64, i: f64, g: f64, gamma_n: f64, a: f64, field: f64) -> Vec<OracleLevel> {
    let h = hamiltonian(s, i, g, gamma_n, a, field);
    let eig = SymmetricEigen::new(h);
    let mut basis = Vec::new();
    for ms in projections(s) {
        for mi in projections(i) {
            basis.push((ms, mi));
        }
    }
    let mut levels: Vec<OracleLevel> = (0..basis.len())
        .map(|k| {
            let v = eig.eigenvectors.column(k);
            let dom = (0..v.len()).max_by(|&x, &y| v[x].abs().total_cmp(&v[y].abs())).unwrap();
            OracleLevel {
                energy: eig.eigenvalues[k],
                ms: basis[dom].0,
                mi: basis[dom].1,
            }
        })
        .collect();
    levels.sort_by(|x, y| x.energy.total_cmp(&y.energy));
    levels
}

/// Boltzmann weights of `levels` at `temperature` K.
pub fn boltzmann(levels: &[OracleLevel], temperature: f64) -> Vec<f64> {
    let e0 = levels[0].energy;
    let w: Vec<f64> = levels.iter().map(|l| (-(l.energy - e0) * H_OVER_KB / temperature).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

pub fn find(levels: &[OracleLevel], ms: f64, mi: f64) -> usize {
    levels.iter().position(|l| l.ms == ms && l.mi == mi).expect("label present")
}

/// ⟨Iz⟩/I of populations `p` over `levels`.
pub fn nuclear_polarization(levels: &[OracleLevel], p: &[f64], i: f64) -> f64 {
    levels.iter().zip(p).map(|(l, x)| l.mi * x).sum::<f64>() / i
}

/// Electron Boltzmann exponent hν_e/kT for the bare electron Zeeman frequency.
pub fn electron_x(g: f64, field: f64, temperature: f64) -> f64 {
    g * MU_B_OVER_H * field * H_OVER_KB / temperature
}
