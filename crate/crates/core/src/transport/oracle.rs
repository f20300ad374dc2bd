use itertools::Itertools;

use super::ConvexCost;
use crate::error::{Error, Result};

/// Largest atom count per side for exhaustive enumeration.
pub const MAX_EXHAUSTIVE: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleValue {
    /// Minimum mean cost over all matchings.
    pub exhaustive: f64,
    /// Mean cost of the sorted (monotone) matching.
    pub monotone: f64,
}

/// Brute-force transport between two equal-weight atom sets of the same size.
pub fn discrete_oracle(a: &[f64], b: &[f64], h: &ConvexCost) -> Result<OracleValue> {
    if a.is_empty() || a.len() != b.len() {
        return Err(Error::InvalidMeasure(format!(
            "oracle needs equal non-zero atom counts, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let k = a.len();
    if k > MAX_EXHAUSTIVE {
        return Err(Error::TooLarge { atoms: k, max: MAX_EXHAUSTIVE });
    }
    let cost = |perm: &[usize]| -> f64 {
        perm.iter()
            .enumerate()
            .map(|(i, &j)| h.eval((a[i] - b[j]).abs()))
            .sum::<f64>()
            / k as f64
    };
    let exhaustive = (0..k)
        .permutations(k)
        .map(|p| cost(&p))
        .fold(f64::INFINITY, f64::min);
    let sorted_a: Vec<f64> = a.iter().copied().sorted_by(f64::total_cmp).collect();
    let sorted_b: Vec<f64> = b.iter().copied().sorted_by(f64::total_cmp).collect();
    let monotone = sorted_a
        .iter()
        .zip(&sorted_b)
        .map(|(x, y)| h.eval((x - y).abs()))
        .sum::<f64>()
        / k as f64;
    Ok(OracleValue { exhaustive, monotone })
}

/// Minimum-cost perfect matching of a square cost matrix (Hungarian method
/// with potentials). Returns the total cost and the column of each row.
pub fn assignment(cost: &[Vec<f64>]) -> (f64, Vec<usize>) {
    let n = cost.len();
    // 1-based arrays with a sentinel column 0
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of = vec![0; n];
    for j in 1..=n {
        col_of[row_of[j] - 1] = j - 1;
    }
    let total = (0..n).map(|i| cost[i][col_of[i]]).sum();
    (total, col_of)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn crossing_pair_and_singletons() {
        let v = discrete_oracle(&[0.0, 2.0], &[1.0, 3.0], &ConvexCost::Power(2.0)).unwrap();
        assert_eq!(v.monotone, 1.0);
        assert_eq!(v.exhaustive, 1.0);
        let crossed = (9.0 + 1.0) / 2.0;
        assert!(v.exhaustive < crossed);
        let one = discrete_oracle(&[0.5], &[-1.5], &ConvexCost::Power(3.0)).unwrap();
        assert_eq!(one.exhaustive, 8.0);
        assert!(matches!(
            discrete_oracle(&[0.0; 9], &[0.0; 9], &ConvexCost::Linear),
            Err(Error::TooLarge { atoms: 9, max: 8 })
        ));
    }

    #[test]
    fn monotone_matching_is_optimal_for_convex_costs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let a: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
            for h in [ConvexCost::Linear, ConvexCost::Power(2.0)] {
                let v = discrete_oracle(&a, &b, &h).unwrap();
                assert!((v.exhaustive - v.monotone).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hungarian_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for k in 1..=7 {
            let c: Vec<Vec<f64>> = (0..k).map(|_| (0..k).map(|_| rng.gen_range(0.0..5.0)).collect()).collect();
            let brute = (0..k)
                .permutations(k)
                .map(|p| p.iter().enumerate().map(|(i, &j)| c[i][j]).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            let (best, cols) = assignment(&c);
            assert!((best - brute).abs() < 1e-12);
            assert_eq!(cols.iter().copied().sorted().collect::<Vec<_>>(), (0..k).collect::<Vec<_>>());
        }
    }
}
