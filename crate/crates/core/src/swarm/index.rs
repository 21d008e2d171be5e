//! Uniform-grid neighbour index on the periodic unit square.

use crate::error::{Result, SimError};
use crate::geometry::{periodic_offset, Vec2};

#[derive(Debug, Clone)]
pub struct NeighborIndex {
    cells_per_axis: usize,
    cell_size: f64,
    /// Agent ids grouped by cell; `starts[c]..starts[c + 1]` indexes `ids`.
    starts: Vec<usize>,
    ids: Vec<usize>,
    positions: Vec<Vec2>,
}

impl NeighborIndex {
    /// Bins `positions` into square cells at least `min_cell` wide.
    pub fn build(positions: &[Vec2], min_cell: f64) -> Self {
        let cells_per_axis = ((1.0 / min_cell).floor() as usize).max(1);
        let cell_size = 1.0 / cells_per_axis as f64;
        let n_cells = cells_per_axis * cells_per_axis;
        let cell_of: Vec<usize> = positions
            .iter()
            .map(|&p| cell_index(p, cells_per_axis))
            .collect();
        let mut starts = vec![0usize; n_cells + 1];
        for &c in &cell_of {
            starts[c + 1] += 1;
        }
        for c in 0..n_cells {
            starts[c + 1] += starts[c];
        }
        let mut fill = starts.clone();
        let mut ids = vec![0usize; positions.len()];
        for (id, &c) in cell_of.iter().enumerate() {
            ids[fill[c]] = id;
            fill[c] += 1;
        }
        Self {
            cells_per_axis,
            cell_size,
            starts,
            ids,
            positions: positions.to_vec(),
        }
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Ids within wrapped distance `radius` of `centre`, ascending, skipping `exclude`.
    pub fn query(&self, centre: Vec2, radius: f64, exclude: Option<usize>) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        self.query_into(centre, radius, exclude, &mut out)?;
        Ok(out)
    }

    pub fn query_into(
        &self,
        centre: Vec2,
        radius: f64,
        exclude: Option<usize>,
        out: &mut Vec<usize>,
    ) -> Result<()> {
        out.clear();
        self.visit_within(centre, radius, exclude, |id, _, _| out.push(id))?;
        out.sort_unstable();
        Ok(())
    }

    /// Calls `f(id, offset, distance)` for every agent within `radius` of
    /// `centre`, with the minimum-image offset from `centre`. Cell order, so
    /// callers that need a canonical order must sort.
    pub fn visit_within(
        &self,
        centre: Vec2,
        radius: f64,
        exclude: Option<usize>,
        mut f: impl FnMut(usize, Vec2, f64),
    ) -> Result<()> {
        if radius > self.cell_size * (1.0 + 1e-12) {
            return Err(SimError::QueryRadius {
                radius,
                cell: self.cell_size,
            });
        }
        let m = self.cells_per_axis as i64;
        let c = cell_index(centre, self.cells_per_axis);
        let (cx, cy) = (
            (c % self.cells_per_axis) as i64,
            (c / self.cells_per_axis) as i64,
        );
        let span: &[i64] = if m >= 3 {
            &[-1, 0, 1]
        } else if m == 2 {
            &[0, 1]
        } else {
            &[0]
        };
        for &dy in span {
            for &dx in span {
                let cell = ((cy + dy).rem_euclid(m) * m + (cx + dx).rem_euclid(m)) as usize;
                for &id in &self.ids[self.starts[cell]..self.starts[cell + 1]] {
                    if Some(id) == exclude {
                        continue;
                    }
                    let offset = periodic_offset(centre, self.positions[id]);
                    let distance = offset.norm();
                    if distance <= radius {
                        f(id, offset, distance);
                    }
                }
            }
        }
        Ok(())
    }
}

fn cell_index(p: Vec2, m: usize) -> usize {
    let p = p.wrapped();
    let cx = ((p.x * m as f64) as usize).min(m - 1);
    let cy = ((p.y * m as f64) as usize).min(m - 1);
    cy * m + cx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::periodic_distance;
    use proptest::prelude::*;

    #[test]
    fn pair_at_distance_point_one() {
        let pts = [Vec2::new(0.2, 0.2), Vec2::new(0.3, 0.2)];
        let idx = NeighborIndex::build(&pts, 0.125);
        assert_eq!(idx.query(pts[0], 0.125, Some(0)).unwrap(), vec![1]);
        assert_eq!(idx.query(pts[1], 0.125, Some(1)).unwrap(), vec![0]);
        assert!(idx.query(pts[0], 0.05, Some(0)).unwrap().is_empty());
    }

    #[test]
    fn finds_neighbours_across_the_seam() {
        let pts = [Vec2::new(0.99, 0.5), Vec2::new(0.01, 0.5)];
        let idx = NeighborIndex::build(&pts, 0.125);
        assert_eq!(idx.query(pts[0], 0.03, Some(0)).unwrap(), vec![1]);
    }

    #[test]
    fn rejects_oversized_query() {
        let idx = NeighborIndex::build(&[Vec2::new(0.5, 0.5)], 0.125);
        assert!(matches!(
            idx.query(Vec2::new(0.5, 0.5), 0.2, None),
            Err(SimError::QueryRadius { .. })
        ));
    }

    proptest! {
        #[test]
        fn matches_brute_force(
            pts in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..200),
            q in (0.0f64..1.0, 0.0f64..1.0),
            r in 0.0f64..0.125,
            cell in 0.05f64..0.6,
        ) {
            let pts: Vec<Vec2> = pts.into_iter().map(|(x, y)| Vec2::new(x, y)).collect();
            let idx = NeighborIndex::build(&pts, cell);
            let q = Vec2::new(q.0, q.1);
            let r = r.min(idx.cell_size());
            let got = idx.query(q, r, Some(0)).unwrap();
            let want: Vec<usize> = (1..pts.len())
                .filter(|&j| periodic_distance(q, pts[j]) <= r)
                .collect();
            prop_assert_eq!(got, want);
        }
    }
}
