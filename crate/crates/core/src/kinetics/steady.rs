use std::collections::BTreeSet;

use super::Generator;
use crate::error::{Error, Result};
use crate::population::PopulationState;

fn reachable(r: &Generator, start: usize) -> Vec<bool> {
    let n = r.dim();
    let mut seen = vec![false; n];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(i) = stack.pop() {
        for j in 0..n {
            if j != i && !seen[j] && r.rate(i, j) > 0.0 {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen
}

/// Closed communicating classes of the jump graph. The generator's kernel has
/// one dimension per class.
pub fn closed_classes(r: &Generator) -> Vec<Vec<usize>> {
    let n = r.dim();
    let reach: Vec<Vec<bool>> = (0..n).map(|i| reachable(r, i)).collect();
    let mut classes = BTreeSet::new();
    for i in 0..n {
        let closed = (0..n).all(|j| !reach[i][j] || reach[j][i]);
        if closed {
            let class: Vec<usize> = (0..n).filter(|&j| reach[i][j]).collect();
            classes.insert(class);
        }
    }
    classes.into_iter().collect()
}

/// Stationary distribution of an irreducible chain by Grassmann-Taksar-Heyman
/// state reduction, which avoids subtractive cancellation.
fn gth(rates: &mut [Vec<f64>]) -> Result<Vec<f64>> {
    let n = rates.len();
    let mut exit = vec![0.0; n];
    for k in (1..n).rev() {
        let s: f64 = (0..k).map(|j| rates[k][j]).sum();
        if s <= 0.0 {
            return Err(Error::InvalidGenerator(format!("state {k} cannot leave during reduction")));
        }
        exit[k] = s;
        for i in 0..k {
            let via = rates[i][k] / s;
            if via == 0.0 {
                continue;
            }
            for j in 0..k {
                if j != i {
                    rates[i][j] += via * rates[k][j];
                }
            }
        }
    }
    let mut pi = vec![0.0; n];
    pi[0] = 1.0;
    for k in 1..n {
        pi[k] = (0..k).map(|i| pi[i] * rates[i][k]).sum::<f64>() / exit[k];
    }
    let total: f64 = pi.iter().sum();
    Ok(pi.into_iter().map(|x| x / total).collect())
}

/// The unique p with R·p = 0, sum(p) = 1.
pub fn steady_state(r: &Generator) -> Result<PopulationState> {
    r.validate()?;
    let classes = closed_classes(r);
    if classes.len() != 1 {
        return Err(Error::Multiplicity(classes.len()));
    }
    let class = &classes[0];
    let mut rates: Vec<Vec<f64>> = class
        .iter()
        .map(|&i| class.iter().map(|&j| if i == j { 0.0 } else { r.rate(i, j) }).collect())
        .collect();
    let pi = gth(&mut rates)?;
    let mut p = vec![0.0; r.dim()];
    for (&level, x) in class.iter().zip(pi) {
        p[level] = x;
    }

    let residual = r.apply(&p).iter().map(|x| x.abs()).fold(0.0, f64::max);
    if residual > 1e-10 * r.norm() {
        return Err(Error::Integrator(format!(
            "steady-state residual {residual:e} exceeds 1e-10·‖R‖"
        )));
    }
    Ok(PopulationState::from_raw(p)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn disconnected_graph_is_rejected() {
        let mut g = Generator::zeros(4);
        g.add_pair(0, 1, 1.0);
        g.add_pair(2, 3, 1.0);
        assert!(matches!(steady_state(&g), Err(Error::Multiplicity(2))));
    }

    #[test]
    fn transient_states_get_zero_weight() {
        let mut g = Generator::zeros(3);
        g.add_rate(0, 1, 2.0);
        g.add_pair(1, 2, 1.0);
        let p = steady_state(&g).unwrap();
        assert_eq!(p[0], 0.0);
        assert!((p[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn three_state_cycle() {
        // 0 → 1 → 2 → 0 with rates 1, 2, 4: π ∝ 1/rate.
        let mut g = Generator::zeros(3);
        g.add_rate(0, 1, 1.0);
        g.add_rate(1, 2, 2.0);
        g.add_rate(2, 0, 4.0);
        let p = steady_state(&g).unwrap();
        let z = 1.0 + 0.5 + 0.25;
        for (k, want) in [1.0 / z, 0.5 / z, 0.25 / z].into_iter().enumerate() {
            assert!((p[k] - want).abs() < 1e-15);
        }
    }

    #[test]
    fn full_saturation_is_uniform() {
        let n = 5;
        let mut g = Generator::zeros(n);
        for i in 0..n {
            for j in i + 1..n {
                g.add_pair(i, j, 1e6);
            }
        }
        g.add_rate(4, 0, 1.0);
        let p = steady_state(&g).unwrap();
        for x in p.as_slice() {
            assert!((x - 0.2).abs() < 1e-6);
        }
    }

    #[test]
    fn rejects_non_generators() {
        let m = DMatrix::from_row_slice(2, 2, &[-1.0, 0.5, 1.0, -0.5]);
        assert!(Generator::from_matrix(m).is_ok());
        let bad = DMatrix::from_row_slice(2, 2, &[-1.0, 0.5, 1.0, -0.4]);
        assert!(Generator::from_matrix(bad).is_err());
    }
}
