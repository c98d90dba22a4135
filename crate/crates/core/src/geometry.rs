//! Hexagonal cell layout, random user drops, and BS-user distances.
//!
//! Cells are flat-topped hexagons of circumradius `R`. The target cell sits
//! at the origin; for the 7-cell grid the outer ring is placed at distance
//! sqrt(3)*R at angles 60 degrees apart, so the center cell is fully
//! surrounded by interferers.

use rand::Rng;

use crate::{Result, SimError};

/// Ratio of the close-in exclusion radius to the cell radius. Path loss
/// diverges as the BS-user distance goes to zero, so drops closer than
/// `R * MIN_DISTANCE_RATIO` to the home BS are rejected.
pub const MIN_DISTANCE_RATIO: f64 = 0.1;

/// Rejection-sampling attempts per user before giving up.
const MAX_REJECTION_RETRIES: usize = 100_000;

/// 2-D point in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Base-station positions on the hexagonal grid.
#[derive(Debug, Clone)]
pub struct CellularLayout {
    pub bs_positions: Vec<Point>,
    pub cell_radius: f64,
}

impl CellularLayout {
    pub fn cell_count(&self) -> usize {
        self.bs_positions.len()
    }
}

/// Random user positions, `positions[j][k]` for user k of cell j.
#[derive(Debug, Clone, PartialEq)]
pub struct UserDrop {
    pub positions: Vec<Vec<Point>>,
}

impl UserDrop {
    pub fn users_per_cell(&self) -> usize {
        self.positions.first().map_or(0, Vec::len)
    }
}

/// BS-user distance tensor, `r[i][j][k]` = distance from user k of cell j to
/// the BS of cell i, in meters.
#[derive(Debug, Clone)]
pub struct DistanceTensor {
    pub cells: usize,
    pub users_per_cell: usize,
    data: Vec<f64>,
}

impl DistanceTensor {
    #[inline]
    pub fn get(&self, bs: usize, cell: usize, user: usize) -> f64 {
        self.data[(bs * self.cells + cell) * self.users_per_cell + user]
    }
}

/// Builds the grid for L = 1 (single cell) or L = 7 (center plus one ring).
pub fn build_hex_layout(cell_count: usize, cell_radius: f64) -> Result<CellularLayout> {
    if cell_radius <= 0.0 {
        return Err(SimError::Config(format!(
            "cell radius must be positive, got {cell_radius}"
        )));
    }
    let mut bs_positions = vec![Point { x: 0.0, y: 0.0 }];
    match cell_count {
        1 => {}
        7 => {
            let d = 3f64.sqrt() * cell_radius;
            for m in 0..6 {
                let angle = std::f64::consts::FRAC_PI_3 * m as f64;
                bs_positions.push(Point {
                    x: d * angle.cos(),
                    y: d * angle.sin(),
                });
            }
        }
        other => {
            return Err(SimError::Config(format!(
                "unsupported cell count {other}; supported values are 1 and 7"
            )));
        }
    }
    Ok(CellularLayout {
        bs_positions,
        cell_radius,
    })
}

/// Point-in-hexagon test for a flat-topped hexagon of circumradius `r`
/// centered at `center`.
pub fn in_hexagon(p: &Point, center: &Point, r: f64) -> bool {
    let x = (p.x - center.x).abs();
    let y = (p.y - center.y).abs();
    let apothem = r * 3f64.sqrt() / 2.0;
    y <= apothem + 1e-12 && y <= 3f64.sqrt() * (r - x) + 1e-12
}

/// Drops `users_per_cell` positions per cell, i.i.d. uniform over each
/// hexagon, rejecting positions within `R * MIN_DISTANCE_RATIO` of the home
/// BS. Deterministic given the rng state.
pub fn drop_users<R: Rng>(
    layout: &CellularLayout,
    users_per_cell: usize,
    rng: &mut R,
) -> Result<UserDrop> {
    if users_per_cell == 0 {
        return Err(SimError::Config(
            "users_per_cell must be at least 1".into(),
        ));
    }
    let r = layout.cell_radius;
    let r_min = r * MIN_DISTANCE_RATIO;
    let apothem = r * 3f64.sqrt() / 2.0;
    let mut positions = Vec::with_capacity(layout.cell_count());
    for bs in &layout.bs_positions {
        let mut cell = Vec::with_capacity(users_per_cell);
        for _ in 0..users_per_cell {
            let mut placed = false;
            for _ in 0..MAX_REJECTION_RETRIES {
                let p = Point {
                    x: bs.x + rng.random_range(-r..=r),
                    y: bs.y + rng.random_range(-apothem..=apothem),
                };
                if in_hexagon(&p, bs, r) && p.distance(bs) >= r_min {
                    cell.push(p);
                    placed = true;
                    break;
                }
            }
            if !placed {
                return Err(SimError::Config(format!(
                    "rejection sampling failed after {MAX_REJECTION_RETRIES} attempts; \
                     is the minimum BS-user distance {r_min} compatible with radius {r}?"
                )));
            }
        }
        positions.push(cell);
    }
    Ok(UserDrop { positions })
}

/// Euclidean distances from every BS to every user.
pub fn distances(layout: &CellularLayout, drop: &UserDrop) -> Result<DistanceTensor> {
    let cells = layout.cell_count();
    if drop.positions.len() != cells {
        return Err(SimError::Dimension(format!(
            "drop has {} cells, layout has {cells}",
            drop.positions.len()
        )));
    }
    let users_per_cell = drop.users_per_cell();
    let mut data = Vec::with_capacity(cells * cells * users_per_cell);
    for bs in &layout.bs_positions {
        for cell in &drop.positions {
            for user in cell {
                data.push(user.distance(bs));
            }
        }
    }
    Ok(DistanceTensor {
        cells,
        users_per_cell,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Purpose};
    use approx::assert_relative_eq;

    #[test]
    fn single_cell_layout() {
        let layout = build_hex_layout(1, 500.0).unwrap();
        assert_eq!(layout.cell_count(), 1);
        assert_eq!(layout.bs_positions[0], Point { x: 0.0, y: 0.0 });
    }

    #[test]
    fn seven_cell_ring_geometry() {
        let layout = build_hex_layout(7, 500.0).unwrap();
        assert_relative_eq!(layout.bs_positions[1].x, 3f64.sqrt() * 500.0, epsilon = 1e-9);
        assert_relative_eq!(layout.bs_positions[1].y, 0.0, epsilon = 1e-9);
        let origin = Point { x: 0.0, y: 0.0 };
        for p in &layout.bs_positions[1..] {
            assert_relative_eq!(p.distance(&origin), 3f64.sqrt() * 500.0, epsilon = 1e-9);
        }
    }

    // Brute-force check of all pairwise ring distances: adjacent ring BSs are
    // sqrt(3)*R apart, next-but-one 3R, opposite 2*sqrt(3)*R.
    #[test]
    fn ring_pairwise_distances() {
        let r = 500.0;
        let layout = build_hex_layout(7, r).unwrap();
        let expected = [
            3f64.sqrt() * r,
            3.0 * r,
            2.0 * 3f64.sqrt() * r,
            3.0 * r,
            3f64.sqrt() * r,
        ];
        for a in 1..7 {
            for b in (a + 1)..7 {
                let d = layout.bs_positions[a].distance(&layout.bs_positions[b]);
                let hops = b - a;
                assert_relative_eq!(d, expected[hops - 1], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn unsupported_cell_count_is_rejected() {
        let err = build_hex_layout(3, 500.0).unwrap_err();
        assert!(err.to_string().contains("1 and 7"), "{err}");
    }

    #[test]
    fn users_contained_and_clear_of_bs() {
        let layout = build_hex_layout(7, 500.0).unwrap();
        let mut rng = substream(1, 0, Purpose::UserDrop);
        let drop = drop_users(&layout, 8, &mut rng).unwrap();
        assert_eq!(drop.positions.len(), 7);
        for (j, cell) in drop.positions.iter().enumerate() {
            assert_eq!(cell.len(), 8);
            for p in cell {
                assert!(in_hexagon(p, &layout.bs_positions[j], 500.0));
                assert!(p.distance(&layout.bs_positions[j]) >= 50.0);
            }
        }
    }

    #[test]
    fn drops_are_deterministic() {
        let layout = build_hex_layout(7, 500.0).unwrap();
        let a = drop_users(&layout, 8, &mut substream(9, 5, Purpose::UserDrop)).unwrap();
        let b = drop_users(&layout, 8, &mut substream(9, 5, Purpose::UserDrop)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn min_distance_holds_across_many_seeded_drops() {
        let layout = build_hex_layout(1, 500.0).unwrap();
        for trial in 0..10_000u64 {
            let mut rng = substream(3, trial, Purpose::UserDrop);
            let drop = drop_users(&layout, 1, &mut rng).unwrap();
            let d = drop.positions[0][0].distance(&layout.bs_positions[0]);
            assert!(d >= 50.0, "trial {trial}: {d}");
        }
    }

    // Independent oracle: mean distance of a uniform point on a flat-topped
    // hexagon of circumradius R minus a disc of radius r_min, by polar
    // quadrature. The hexagon boundary at angle t (folded into [0, 30deg] of
    // the fundamental wedge ending at a vertex) is rho(t) = apothem /
    // cos(30deg - t).
    fn hexagon_hole_mean_distance(r: f64, r_min: f64) -> f64 {
        let apothem = r * 3f64.sqrt() / 2.0;
        let wedge = std::f64::consts::PI / 6.0;
        let n = 200_000;
        let dt = wedge / n as f64;
        let (mut mass, mut moment) = (0.0, 0.0);
        for i in 0..n {
            let t = (i as f64 + 0.5) * dt;
            let rho = apothem / (wedge - t).cos();
            // radial integrals of r dr and r^2 dr over [r_min, rho]
            mass += 0.5 * (rho * rho - r_min * r_min) * dt;
            moment += (rho.powi(3) - r_min.powi(3)) / 3.0 * dt;
        }
        moment / mass
    }

    #[test]
    fn mean_distance_matches_quadrature_oracle() {
        let r = 500.0;
        let layout = build_hex_layout(1, r).unwrap();
        let mut rng = substream(11, 0, Purpose::UserDrop);
        let drop = drop_users(&layout, 10_000, &mut rng).unwrap();
        let origin = Point { x: 0.0, y: 0.0 };
        let mean: f64 = drop.positions[0]
            .iter()
            .map(|p| p.distance(&origin))
            .sum::<f64>()
            / 10_000.0;
        let expected = hexagon_hole_mean_distance(r, 50.0);
        assert!(
            (mean - expected).abs() / expected < 0.02,
            "sampled {mean}, oracle {expected}"
        );
    }

    #[test]
    fn distance_tensor_matches_hand_recomputation() {
        let layout = build_hex_layout(7, 500.0).unwrap();
        let mut rng = substream(2, 1, Purpose::UserDrop);
        let drop = drop_users(&layout, 4, &mut rng).unwrap();
        let r = distances(&layout, &drop).unwrap();
        for (i, j, k) in [(0, 3, 1), (5, 2, 0), (6, 6, 3)] {
            let bs = layout.bs_positions[i];
            let u = drop.positions[j][k];
            let byhand = ((u.x - bs.x).powi(2) + (u.y - bs.y).powi(2)).sqrt();
            assert_relative_eq!(r.get(i, j, k), byhand, epsilon = 1e-12);
        }
        // home-cell distances respect the exclusion radius
        for j in 0..7 {
            for k in 0..4 {
                assert!(r.get(j, j, k) >= 50.0);
            }
        }
    }

    #[test]
    fn vertex_user_is_at_circumradius() {
        let layout = build_hex_layout(1, 500.0).unwrap();
        let drop = UserDrop {
            positions: vec![vec![Point { x: 500.0, y: 0.0 }]],
        };
        let r = distances(&layout, &drop).unwrap();
        assert_relative_eq!(r.get(0, 0, 0), 500.0);
    }
}
