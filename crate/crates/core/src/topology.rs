//! Node placement, unit disk graph construction, and disk/sector geometry.
//!
//! Distances are in plane units with the transmission radius fixed at 1: two
//! nodes are adjacent iff their Euclidean distance is at most 1 (ties on the
//! boundary count as edges). Each node's neighborhood additionally partitions
//! into six 60° sectors by angle; any two nodes in the same sector of `u` are
//! within distance 1 of each other.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::engine::rng::{derive_stream, StreamPurpose};
use crate::{Error, NodeId, Result};

/// Planar node coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Positions {
    coords: Vec<(f64, f64)>,
}

impl Positions {
    fn validated(coords: Vec<(f64, f64)>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidConfig(
                "topology.n: need at least one node".into(),
            ));
        }
        if let Some(i) = coords
            .iter()
            .position(|&(x, y)| !x.is_finite() || !y.is_finite())
        {
            return Err(Error::InvalidConfig(format!(
                "topology.coords: non-finite coordinate at node {i}"
            )));
        }
        Ok(Self { coords })
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[(f64, f64)] {
        &self.coords
    }

    pub fn get(&self, u: NodeId) -> Option<(f64, f64)> {
        self.coords.get(u as usize).copied()
    }

    /// CSV dump: header `node_id,x,y`, one row per node.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("node_id,x,y\n");
        for (i, (x, y)) in self.coords.iter().enumerate() {
            out.push_str(&format!("{i},{x},{y}\n"));
        }
        out
    }
}

/// `n` i.i.d. uniform points in `[0, side]²`, deterministic given the seed.
pub fn place_uniform(n: usize, side: f64, seed: u64) -> Result<Positions> {
    if n == 0 {
        return Err(Error::InvalidConfig("topology.n: must be at least 1".into()));
    }
    if !side.is_finite() || side <= 0.0 {
        return Err(Error::InvalidConfig(
            "topology.side: must be positive and finite".into(),
        ));
    }
    let mut rng = derive_stream(seed, StreamPurpose::Placement, None, None);
    let coords = (0..n)
        .map(|_| (rng.uniform() * side, rng.uniform() * side))
        .collect();
    Positions::validated(coords)
}

/// `n` i.i.d. points with both coordinates `Normal(center, sigma²)`,
/// deterministic given the seed. Points are not clipped to any plane; the
/// unit disk rule alone defines connectivity.
pub fn place_gaussian(n: usize, sigma: f64, center: (f64, f64), seed: u64) -> Result<Positions> {
    if n == 0 {
        return Err(Error::InvalidConfig("topology.n: must be at least 1".into()));
    }
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::InvalidConfig(
            "topology.sigma: must be positive and finite".into(),
        ));
    }
    if !center.0.is_finite() || !center.1.is_finite() {
        return Err(Error::InvalidConfig(
            "topology.center: must be finite".into(),
        ));
    }
    let normal = Normal::new(0.0, sigma).expect("sigma validated above");
    let mut rng = derive_stream(seed, StreamPurpose::Placement, None, None);
    let coords = (0..n)
        .map(|_| {
            (
                center.0 + normal.sample(&mut rng),
                center.1 + normal.sample(&mut rng),
            )
        })
        .collect();
    Positions::validated(coords)
}

/// Wrap explicit coordinates (used by the attack scenarios).
pub fn place_explicit(coords: Vec<(f64, f64)>) -> Result<Positions> {
    Positions::validated(coords)
}

/// Node positions plus unit-disk adjacency.
///
/// Neighbor lists are sorted ascending with no duplicates; adjacency is
/// symmetric and irreflexive. Squared distances are compared against 1.0
/// exactly, so a distance of exactly 1 is an edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    positions: Positions,
    adjacency: Vec<Vec<NodeId>>,
}

/// Build the unit disk graph over the given positions.
pub fn build_udg(positions: Positions) -> Topology {
    let n = positions.len();
    let coords = positions.coords();
    let mut adjacency: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    for u in 0..n {
        let (ux, uy) = coords[u];
        for v in (u + 1)..n {
            let (vx, vy) = coords[v];
            let (dx, dy) = (vx - ux, vy - uy);
            if dx * dx + dy * dy <= 1.0 {
                adjacency[u].push(v as NodeId);
                adjacency[v].push(u as NodeId);
            }
        }
    }
    // Lists come out sorted because both loops ascend.
    Topology {
        positions,
        adjacency,
    }
}

impl Topology {
    pub fn n(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &Positions {
        &self.positions
    }

    pub fn check_node(&self, u: NodeId) -> Result<()> {
        if (u as usize) < self.n() {
            Ok(())
        } else {
            Err(Error::UnknownNode(u))
        }
    }

    /// Sorted open neighborhood N(u). Panics if `u` is out of range; use
    /// [`Topology::disk`] for a validated query.
    pub fn neighbors(&self, u: NodeId) -> &[NodeId] {
        &self.adjacency[u as usize]
    }

    pub fn degree(&self, u: NodeId) -> usize {
        self.adjacency[u as usize].len()
    }

    /// Closed unit disk D(u) = N(u) ∪ {u}, sorted ascending.
    pub fn disk(&self, u: NodeId) -> Result<Vec<NodeId>> {
        self.check_node(u)?;
        let neighbors = self.neighbors(u);
        let mut disk = Vec::with_capacity(neighbors.len() + 1);
        let split = neighbors.partition_point(|&w| w < u);
        disk.extend_from_slice(&neighbors[..split]);
        disk.push(u);
        disk.extend_from_slice(&neighbors[split..]);
        Ok(disk)
    }

    /// Sector index in 0..=5 of neighbor `w` as seen from `u`: the floor of
    /// the angle of u→w (normalized to [0°, 360°)) divided by 60°. An angle
    /// exactly on a boundary goes to the higher sector.
    pub fn sector_of(&self, u: NodeId, w: NodeId) -> Result<u8> {
        self.check_node(u)?;
        self.check_node(w)?;
        if self.neighbors(u).binary_search(&w).is_err() {
            return Err(Error::NotNeighbor { u, w });
        }
        let (ux, uy) = self.positions.get(u).expect("checked");
        let (wx, wy) = self.positions.get(w).expect("checked");
        Ok(sector_of_angle(wy - uy, wx - ux))
    }

    /// Connectivity and density report for a target ε.
    pub fn validate_regime(&self, epsilon: f64) -> RegimeReport {
        let n = self.n();
        let min_disk = (0..n)
            .map(|u| self.degree(u as NodeId) + 1)
            .min()
            .unwrap_or(0);
        let required_disk = if epsilon > 0.0 {
            2.0 / epsilon
        } else {
            f64::INFINITY
        };
        RegimeReport {
            connected: self.is_connected(),
            min_disk,
            required_disk,
            density_ok: min_disk as f64 >= required_disk,
        }
    }

    fn is_connected(&self) -> bool {
        let n = self.n();
        if n == 0 {
            return false;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0u32];
        seen[0] = true;
        let mut reached = 1;
        while let Some(u) = stack.pop() {
            for &w in self.neighbors(u) {
                if !seen[w as usize] {
                    seen[w as usize] = true;
                    reached += 1;
                    stack.push(w);
                }
            }
        }
        reached == n
    }
}

fn sector_of_angle(dy: f64, dx: f64) -> u8 {
    let mut angle = dy.atan2(dx);
    if angle < 0.0 {
        angle += 2.0 * std::f64::consts::PI;
    }
    let sector = (angle / (std::f64::consts::PI / 3.0)).floor() as i64;
    sector.clamp(0, 5) as u8
}

/// Connectivity flag plus the minimum closed-disk size against the `2/ε`
/// density condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub connected: bool,
    pub min_disk: usize,
    pub required_disk: f64,
    pub density_ok: bool,
}

/// Per-node partition of the neighborhood into six sectors.
#[derive(Debug, Clone)]
pub struct SectorIndex {
    per_node: Vec<[Vec<NodeId>; 6]>,
}

impl SectorIndex {
    pub fn build(topo: &Topology) -> Self {
        let per_node = (0..topo.n())
            .map(|u| {
                let mut sectors: [Vec<NodeId>; 6] = Default::default();
                for &w in topo.neighbors(u as NodeId) {
                    let s = topo.sector_of(u as NodeId, w).expect("w is a neighbor");
                    sectors[s as usize].push(w);
                }
                sectors
            })
            .collect();
        Self { per_node }
    }

    pub fn nodes_in(&self, u: NodeId, sector: u8) -> &[NodeId] {
        &self.per_node[u as usize][sector as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn udg_from(coords: &[(f64, f64)]) -> Topology {
        build_udg(place_explicit(coords.to_vec()).unwrap())
    }

    #[test]
    fn place_uniform_rejects_bad_args() {
        assert!(place_uniform(0, 4.0, 1).is_err());
        assert!(place_uniform(5, 0.0, 1).is_err());
        assert!(place_uniform(5, -1.0, 1).is_err());
    }

    #[test]
    fn place_uniform_single_point_in_bounds() {
        let p = place_uniform(1, 4.0, 99).unwrap();
        let (x, y) = p.get(0).unwrap();
        assert!((0.0..=4.0).contains(&x) && (0.0..=4.0).contains(&y));
    }

    #[test]
    fn place_uniform_deterministic() {
        let a = place_uniform(500, 4.0, 123).unwrap();
        let b = place_uniform(500, 4.0, 123).unwrap();
        assert_eq!(a, b);
        let c = place_uniform(500, 4.0, 124).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn place_uniform_mean_near_center() {
        let p = place_uniform(100, 4.0, 7).unwrap();
        let mean_x: f64 =
            p.coords().iter().map(|&(x, _)| x).sum::<f64>() / p.len() as f64;
        assert!((1.6..=2.4).contains(&mean_x), "mean_x {mean_x}");
    }

    #[test]
    fn place_gaussian_rejects_bad_sigma() {
        assert!(place_gaussian(5, 0.0, (2.0, 2.0), 1).is_err());
        assert!(place_gaussian(5, -1.0, (2.0, 2.0), 1).is_err());
        assert!(place_gaussian(0, 1.0, (2.0, 2.0), 1).is_err());
    }

    #[test]
    fn place_gaussian_degenerate_variance_hugs_center() {
        let p = place_gaussian(1, 1e-12, (2.0, 2.0), 5).unwrap();
        let (x, y) = p.get(0).unwrap();
        assert!((x - 2.0).abs() < 1e-9 && (y - 2.0).abs() < 1e-9);
    }

    #[test]
    fn place_gaussian_deterministic_and_sane_spread() {
        let a = place_gaussian(10_000, 1.0, (2.0, 2.0), 11).unwrap();
        let b = place_gaussian(10_000, 1.0, (2.0, 2.0), 11).unwrap();
        assert_eq!(a, b);
        let mean: f64 =
            a.coords().iter().map(|&(x, _)| x).sum::<f64>() / a.len() as f64;
        let var: f64 = a
            .coords()
            .iter()
            .map(|&(x, _)| (x - mean) * (x - mean))
            .sum::<f64>()
            / (a.len() - 1) as f64;
        let stdev = var.sqrt();
        assert!((stdev - 1.0).abs() < 0.05, "stdev {stdev}");
    }

    #[test]
    fn place_explicit_validates() {
        assert!(place_explicit(vec![]).is_err());
        assert!(place_explicit(vec![(0.0, 0.0), (f64::NAN, 0.0)]).is_err());
        assert_eq!(place_explicit(vec![(0.0, 0.0)]).unwrap().len(), 1);
        assert_eq!(
            place_explicit(vec![(0.0, 0.0), (0.5, 0.0)]).unwrap().len(),
            2
        );
    }

    #[test]
    fn udg_simple_line() {
        let t = udg_from(&[(0.0, 0.0), (0.5, 0.0), (1.6, 0.0)]);
        assert_eq!(t.neighbors(0), &[1]);
        assert_eq!(t.neighbors(1), &[0]);
        assert_eq!(t.neighbors(2), &[] as &[NodeId]);
    }

    #[test]
    fn udg_boundary_distance_is_edge() {
        let t = udg_from(&[(0.0, 0.0), (1.0, 0.0)]);
        assert_eq!(t.neighbors(0), &[1]);
    }

    #[test]
    fn udg_matches_bruteforce_on_random_points() {
        let p = place_uniform(50, 4.0, 2024).unwrap();
        let coords: Vec<(f64, f64)> = p.coords().to_vec();
        let t = build_udg(p);
        for u in 0..coords.len() {
            let mut expected: Vec<NodeId> = Vec::new();
            for v in 0..coords.len() {
                if u == v {
                    continue;
                }
                let (dx, dy) = (coords[v].0 - coords[u].0, coords[v].1 - coords[u].1);
                if dx * dx + dy * dy <= 1.0 {
                    expected.push(v as NodeId);
                }
            }
            assert_eq!(t.neighbors(u as NodeId), expected.as_slice());
        }
    }

    #[test]
    fn disk_cases() {
        let isolated = udg_from(&[(0.0, 0.0), (3.0, 3.0)]);
        assert_eq!(isolated.disk(0).unwrap(), vec![0]);

        // Star: center 0 with 4 leaves placed far from each other.
        let star = udg_from(&[
            (0.0, 0.0),
            (0.9, 0.0),
            (-0.9, 0.0),
            (0.0, 0.9),
            (0.0, -0.9),
        ]);
        assert_eq!(star.disk(0).unwrap(), vec![0, 1, 2, 3, 4]);
        assert_eq!(star.disk(1).unwrap(), vec![0, 1]);
        assert!(star.disk(99).is_err());
    }

    #[test]
    fn sector_of_cardinal_angles() {
        let t = udg_from(&[(0.0, 0.0), (0.5, 0.0), (0.0, 0.5), (-0.5, -0.01)]);
        assert_eq!(t.sector_of(0, 1).unwrap(), 0); // 0°
        assert_eq!(t.sector_of(0, 2).unwrap(), 1); // 90°
        assert_eq!(t.sector_of(0, 3).unwrap(), 3); // ≈181°
    }

    #[test]
    fn sector_of_boundary_goes_high() {
        // 60° exactly: full unit distance, on the 0/1 boundary.
        let t = udg_from(&[(0.0, 0.0), (0.5, 0.75f64.sqrt())]);
        assert_eq!(t.sector_of(0, 1).unwrap(), 1);
    }

    #[test]
    fn sector_of_requires_neighbor() {
        let t = udg_from(&[(0.0, 0.0), (2.0, 0.0)]);
        assert!(matches!(
            t.sector_of(0, 1),
            Err(Error::NotNeighbor { u: 0, w: 1 })
        ));
    }

    #[test]
    fn validate_regime_cases() {
        let split = udg_from(&[(0.0, 0.0), (2.0, 0.0)]);
        let r = split.validate_regime(0.3);
        assert!(!r.connected);

        // Clique of 7: min disk 7 ≥ 2/0.3 ≈ 6.67.
        let clique: Vec<(f64, f64)> = (0..7)
            .map(|i| {
                let a = i as f64 / 7.0 * std::f64::consts::TAU;
                (0.2 * a.cos(), 0.2 * a.sin())
            })
            .collect();
        let r = udg_from(&clique).validate_regime(0.3);
        assert!(r.connected && r.density_ok && r.min_disk == 7);

        let path = udg_from(&[(0.0, 0.0), (0.9, 0.0), (1.8, 0.0)]);
        let r = path.validate_regime(0.3);
        assert!(r.connected);
        assert_eq!(r.min_disk, 2);
        assert!(!r.density_ok);
    }

    #[test]
    fn positions_csv_shape() {
        let p = place_explicit(vec![(0.0, 0.0), (1.5, 2.25)]).unwrap();
        let csv = p.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "node_id,x,y");
        assert_eq!(lines[1], "0,0,0");
        assert_eq!(lines[2], "1,1.5,2.25");
    }

    proptest! {
        #[test]
        fn adjacency_symmetric_sorted_irreflexive(
            seed in 0u64..1000,
            n in 2usize..40,
        ) {
            let t = build_udg(place_uniform(n, 2.0, seed).unwrap());
            for u in 0..n {
                let nb = t.neighbors(u as NodeId);
                prop_assert!(nb.windows(2).all(|w| w[0] < w[1]));
                prop_assert!(!nb.contains(&(u as NodeId)));
                for &w in nb {
                    prop_assert!(t.neighbors(w).contains(&(u as NodeId)));
                }
                prop_assert_eq!(t.disk(u as NodeId).unwrap().len(), nb.len() + 1);
            }
        }

        #[test]
        fn sectors_partition_and_have_unit_diameter(
            seed in 0u64..1000,
            n in 2usize..30,
        ) {
            let t = build_udg(place_uniform(n, 1.5, seed).unwrap());
            let index = SectorIndex::build(&t);
            for u in 0..n as NodeId {
                let total: usize = (0..6).map(|s| index.nodes_in(u, s).len()).sum();
                prop_assert_eq!(total, t.degree(u));
                for s in 0..6 {
                    let members = index.nodes_in(u, s);
                    for (i, &a) in members.iter().enumerate() {
                        for &b in &members[i + 1..] {
                            let (ax, ay) = t.positions().get(a).unwrap();
                            let (bx, by) = t.positions().get(b).unwrap();
                            let d2 = (ax - bx).powi(2) + (ay - by).powi(2);
                            prop_assert!(d2 <= 1.0 + 1e-9,
                                "nodes {} and {} in sector {} of {} at distance² {}",
                                a, b, s, u, d2);
                        }
                    }
                }
            }
        }
    }
}
