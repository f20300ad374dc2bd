use std::f64::consts::PI;
use std::sync::OnceLock;

use petgraph::algo::dijkstra;
use petgraph::graph::{NodeIndex, UnGraph};

use super::{assignment, total_cost_1d, ConvexCost, Measure1D};
use crate::diffusion::DiffusionState;
use crate::error::{Error, Result};
use crate::fd;
use crate::geometry::{arclength, sphere_volume};

/// A density on a warped product `[0, r_max] x_psi S^n` sampled on base
/// nodes `r`, with `rows[i]` its values at fiber sample points over `r[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct WarpedDensity {
    pub n: usize,
    pub r: Vec<f64>,
    pub psi: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
}

impl WarpedDensity {
    /// A rotationally symmetric diffusion: one fiber sample per base node.
    pub fn from_diffusion(d: &DiffusionState) -> Self {
        Self {
            n: d.host.n(),
            r: arclength(&d.host),
            psi: d.host.psi().to_vec(),
            rows: d.u.iter().map(|&u| vec![u]).collect(),
        }
    }

    /// `NotUniform` unless every row is constant along the fiber.
    pub fn check_uniform(&self) -> Result<()> {
        for (i, row) in self.rows.iter().enumerate() {
            let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if hi - lo > 1e-12 * hi.abs().max(1e-300) {
                return Err(Error::NotUniform { row: i });
            }
        }
        Ok(())
    }

    /// Pushforward to the base: density `u omega_n psi^n` in `r`.
    pub fn base_measure(&self) -> Result<Measure1D> {
        if self.r.len() < 2 || self.rows.len() != self.r.len() || self.psi.len() != self.r.len() {
            return Err(Error::InvalidMeasure("warped density needs matching r, psi and rows".into()));
        }
        if self.rows.iter().any(|row| row.is_empty()) {
            return Err(Error::InvalidMeasure("empty fiber row".into()));
        }
        self.check_uniform()?;
        let omega = sphere_volume(self.n);
        let dens: Vec<f64> = self
            .rows
            .iter()
            .zip(&self.psi)
            .map(|(row, p)| row[0] * omega * p.powi(self.n as i32))
            .collect();
        if dens.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidMeasure("negative or non-finite density".into()));
        }
        let cum = fd::cumtrapz(&self.r, &dens);
        let total = cum[cum.len() - 1];
        if !(total > 0.0) {
            return Err(Error::InvalidMeasure("zero total mass".into()));
        }
        Measure1D::new(self.r.clone(), cum.into_iter().map(|c| c / total).collect())
    }
}

/// Optimal cost between two spatially uniform measures, computed on the base.
pub fn warped_reduction(mu1: &WarpedDensity, mu2: &WarpedDensity, h: &ConvexCost) -> Result<f64> {
    Ok(total_cost_1d(&mu1.base_measure()?, &mu2.base_measure()?, h))
}

/// Shortest-path metric on a meridian surface `dr^2 + psi(r)^2 dtheta^2`,
/// `theta` periodic. Rings with `psi = 0` collapse to one vertex.
/// Distances are cached per source ring, using the rotation symmetry.
#[derive(Clone, Debug)]
pub struct SurfaceGraph {
    r: Vec<f64>,
    angles: usize,
    graph: UnGraph<(), f64>,
    ids: Vec<Vec<NodeIndex>>,
    from_ring: Vec<OnceLock<Vec<f64>>>,
}

/// Largest ring and angle offset of an edge; primitive offsets only.
const STENCIL: usize = 4;

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl SurfaceGraph {
    pub fn new(r: &[f64], psi: &[f64], angles: usize) -> Self {
        let mut graph = UnGraph::new_undirected();
        let ids: Vec<Vec<NodeIndex>> = psi
            .iter()
            .map(|&p| {
                if p == 0.0 {
                    vec![graph.add_node(()); angles]
                } else {
                    (0..angles).map(|_| graph.add_node(())).collect()
                }
            })
            .collect();
        let dtheta = 2.0 * PI / angles as f64;
        let rings = r.len();
        for i in 0..rings {
            for di in 0..=STENCIL {
                let k = i + di;
                if k >= rings {
                    break;
                }
                let dr = r[k] - r[i];
                let psi_mid = 0.5 * (psi[i] + psi[k]);
                for j in 0..angles {
                    for dj in -(STENCIL as i64)..=STENCIL as i64 {
                        if (di == 0 && dj <= 0) || gcd(di, dj.unsigned_abs() as usize) != 1 {
                            continue;
                        }
                        let jj = (j as i64 + dj).rem_euclid(angles as i64) as usize;
                        let (a, b) = (ids[i][j], ids[k][jj]);
                        if a == b {
                            continue;
                        }
                        let len = (dr * dr + (psi_mid * dtheta * dj as f64).powi(2)).sqrt();
                        graph.add_edge(a, b, len);
                    }
                }
            }
        }
        let from_ring = (0..rings).map(|_| OnceLock::new()).collect();
        Self { r: r.to_vec(), angles, graph, ids, from_ring }
    }

    pub fn radii(&self) -> &[f64] {
        &self.r
    }

    /// Ring and angle index nearest to `(r, theta)`.
    pub fn snap(&self, r: f64, theta: f64) -> (usize, usize) {
        let k = self.r.partition_point(|&v| v < r).min(self.r.len() - 1);
        let i = if k > 0 && (r - self.r[k - 1]).abs() < (self.r[k] - r).abs() { k - 1 } else { k };
        let j = (theta / (2.0 * PI) * self.angles as f64).round().rem_euclid(self.angles as f64) as usize;
        (i, j % self.angles)
    }

    fn ring_table(&self, i: usize) -> &[f64] {
        self.from_ring[i].get_or_init(|| {
            let map = dijkstra(&self.graph, self.ids[i][0], None, |e| *e.weight());
            let mut out = vec![f64::INFINITY; self.graph.node_count()];
            for (v, d) in map {
                out[v.index()] = d;
            }
            out
        })
    }

    /// Graph distance between snapped vertices.
    pub fn vertex_distance(&self, a: (usize, usize), b: (usize, usize)) -> f64 {
        let shift = (b.1 + self.angles - a.1) % self.angles;
        self.ring_table(a.0)[self.ids[b.0][shift].index()]
    }

    pub fn distance(&self, a: (f64, f64), b: (f64, f64)) -> f64 {
        self.vertex_distance(self.snap(a.0, a.1), self.snap(b.0, b.1))
    }

    /// Distances from `(r, theta)` to every listed point.
    pub fn distances_from(&self, a: (f64, f64), to: &[(f64, f64)]) -> Vec<f64> {
        let va = self.snap(a.0, a.1);
        to.iter().map(|b| self.vertex_distance(va, self.snap(b.0, b.1))).collect()
    }
}

/// A coarse product grid over `[0, r_max]` with circle fibers: `rows` base
/// cells and `angles` fiber cells, `psi` evaluated at the cell centres.
#[derive(Clone, Debug)]
pub struct ProductGrid {
    pub r_max: f64,
    pub rows: usize,
    pub angles: usize,
    pub psi: Vec<f64>,
}

/// Most atoms per side the grid oracle will match.
const GRID_ATOMS: usize = 64;
/// Graph refinement of the coarse grid used for ground distances.
const REFINE: usize = 4;

impl ProductGrid {
    pub fn new(r_max: f64, rows: usize, angles: usize, psi: impl Fn(f64) -> f64) -> Self {
        let psi = (0..rows).map(|i| psi(r_max * (i as f64 + 0.5) / rows as f64)).collect();
        Self { r_max, rows, angles, psi }
    }

    pub fn spacing(&self) -> f64 {
        self.r_max / self.rows as f64
    }

    pub fn centre(&self, i: usize) -> f64 {
        self.spacing() * (i as f64 + 0.5)
    }

    /// The same count in every fiber cell of a row.
    pub fn uniform_counts(&self, base: &[usize]) -> Vec<Vec<usize>> {
        base.iter().map(|&k| vec![k; self.angles]).collect()
    }

    /// Splits a base mass profile into integer row counts summing to `total`
    /// (largest remainder).
    pub fn round_counts(weights: &[f64], total: usize) -> Vec<usize> {
        let sum: f64 = weights.iter().sum();
        let exact: Vec<f64> = weights.iter().map(|w| w / sum * total as f64).collect();
        let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
        let mut order: Vec<usize> = (0..weights.len()).collect();
        order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())));
        let missing = total - counts.iter().sum::<usize>();
        for &i in order.iter().take(missing) {
            counts[i] += 1;
        }
        counts
    }

    fn graph(&self) -> SurfaceGraph {
        let fine_rows = self.rows * REFINE;
        let r: Vec<f64> = (0..fine_rows).map(|i| self.r_max * (i as f64 + 0.5) / fine_rows as f64).collect();
        let psi: Vec<f64> = r
            .iter()
            .map(|&x| {
                let centres: Vec<f64> = (0..self.rows).map(|i| self.centre(i)).collect();
                fd::interp_linear(&centres, &self.psi, x)
            })
            .collect();
        SurfaceGraph::new(&r, &psi, self.angles * REFINE)
    }

    fn atoms(&self, counts: &[Vec<usize>]) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for (i, row) in counts.iter().enumerate() {
            for (j, &k) in row.iter().enumerate() {
                let theta = 2.0 * PI * j as f64 / self.angles as f64;
                out.extend(std::iter::repeat_n((self.centre(i), theta), k));
            }
        }
        out
    }
}

/// Exact discrete transport between two equal-mass atom configurations on a
/// product grid, with ground distance from the surface graph. `counts[i][j]`
/// atoms of equal mass sit at base cell `i`, fiber cell `j`.
pub fn grid_oracle(
    grid: &ProductGrid,
    counts1: &[Vec<usize>],
    counts2: &[Vec<usize>],
    h: &ConvexCost,
) -> Result<f64> {
    let shape_ok = |c: &[Vec<usize>]| c.len() == grid.rows && c.iter().all(|row| row.len() == grid.angles);
    if !shape_ok(counts1) || !shape_ok(counts2) {
        return Err(Error::InvalidMeasure(format!("counts must be {}x{}", grid.rows, grid.angles)));
    }
    let (a, b) = (grid.atoms(counts1), grid.atoms(counts2));
    if a.is_empty() || a.len() != b.len() {
        return Err(Error::InvalidMeasure(format!("atom counts differ: {} vs {}", a.len(), b.len())));
    }
    if a.len() > GRID_ATOMS {
        return Err(Error::TooLarge { atoms: a.len(), max: GRID_ATOMS });
    }
    let g = grid.graph();
    let cost: Vec<Vec<f64>> = a
        .iter()
        .map(|&p| g.distances_from(p, &b).into_iter().map(|d| h.eval(d)).collect())
        .collect();
    let (total, _) = assignment(&cost);
    Ok(total / a.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cylinder(rows: Vec<Vec<f64>>, r: &[f64]) -> WarpedDensity {
        WarpedDensity { n: 1, r: r.to_vec(), psi: vec![0.3; r.len()], rows }
    }

    #[test]
    fn reduction_rejects_fiber_dependence_and_vanishes_on_equal_inputs() {
        let r: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let flat = cylinder(r.iter().map(|x| vec![1.0 + x; 4]).collect(), &r);
        assert_eq!(warped_reduction(&flat, &flat, &ConvexCost::Linear).unwrap(), 0.0);
        let mut wavy = flat.clone();
        wavy.rows[3][2] += 0.1;
        assert!(matches!(
            warped_reduction(&flat, &wavy, &ConvexCost::Linear),
            Err(Error::NotUniform { row: 3 })
        ));
    }

    #[test]
    fn surface_graph_on_a_cylinder() {
        let r: Vec<f64> = (0..=40).map(|i| i as f64 / 40.0).collect();
        let g = SurfaceGraph::new(&r, &vec![1.0 / PI; r.len()], 32);
        assert!((g.distance((0.1, 0.0), (0.9, 0.0)) - 0.8).abs() < 1e-12);
        // half way round the circle of length 2
        let around = g.distance((0.5, 0.0), (0.5, PI));
        assert!((around - 1.0).abs() < 0.02, "{around}");
        let diag = g.distance((0.0, 0.0), (1.0, PI));
        assert!((diag - 2f64.sqrt()).abs() < 0.03, "{diag}");
    }

    #[test]
    fn graph_collapses_zero_rings() {
        let r: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0 * PI).collect();
        let psi: Vec<f64> = r.iter().map(|x| x.sin()).collect();
        let mut psi = psi;
        psi[20] = 0.0;
        let g = SurfaceGraph::new(&r, &psi, 16);
        assert_eq!(g.distance((0.0, 0.0), (0.0, 2.0)), 0.0);
        assert!((g.distance((0.0, 0.0), (PI, 1.0)) - PI).abs() < 1e-12);
    }

    #[test]
    fn grid_oracle_on_cylinder_equals_base_cost() {
        let grid = ProductGrid::new(1.0, 16, 8, |_| 0.2);
        let mut base1 = vec![0; 16];
        let mut base2 = vec![0; 16];
        base1[1] = 5;
        base1[4] = 3;
        base2[10] = 4;
        base2[15] = 4;
        let v = grid_oracle(&grid, &grid.uniform_counts(&base1), &grid.uniform_counts(&base2), &ConvexCost::Linear)
            .unwrap();
        let pts = |b: &[usize]| -> Vec<(f64, f64)> {
            b.iter().enumerate().filter(|(_, &k)| k > 0).map(|(i, &k)| (grid.centre(i), k as f64)).collect()
        };
        let one_d = total_cost_1d(
            &Measure1D::atoms(&pts(&base1)).unwrap(),
            &Measure1D::atoms(&pts(&base2)).unwrap(),
            &ConvexCost::Linear,
        );
        assert!((v - one_d).abs() < 1e-12, "{v} vs {one_d}");
        assert_eq!(ProductGrid::round_counts(&[0.26, 0.5, 0.24], 8), vec![2, 4, 2]);
    }
}
