use super::Selection;
use crate::error::Result;
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;

/// Overlap sets of a selection, indexed by 0-based step.
///
/// `intersecting[k]` is I_k = {j < k : D_j ∩ D_k ≠ ∅}; `comparable[k]` is
/// M_k = {j ∈ I_k : r_j ≤ 3 r_k}.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapReport {
    pub intersecting: Vec<Vec<usize>>,
    pub comparable: Vec<Vec<usize>>,
    /// max_k #I_k
    pub max_intersecting: usize,
    /// max_k #M_k, the empirical c(A)
    pub max_comparable: usize,
    /// max_k #(I_k \ M_k), the empirical d(A)
    pub max_far: usize,
}

impl OverlapReport {
    /// Empirical L(A) = c(A) + d(A).
    pub fn l_value(&self) -> usize {
        self.max_comparable + self.max_far
    }

    /// I_k \ M_k for 0-based step k.
    pub fn far(&self, k: usize) -> Vec<usize> {
        let m = &self.comparable[k];
        self.intersecting[k]
            .iter()
            .copied()
            .filter(|j| !m.contains(j))
            .collect()
    }

    /// CSV rows `k,n_intersecting,n_comparable` with 1-based k.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", "n_intersecting", "n_comparable"])?;
        for (k, (i, m)) in self.intersecting.iter().zip(&self.comparable).enumerate() {
            w.write_record([
                (k + 1).to_string(),
                i.len().to_string(),
                m.len().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn overlap_sets(selection: &Selection) -> OverlapReport {
    let space = selection.family.space();
    let balls: Vec<_> = selection.balls().collect();
    let sets: Vec<(Vec<usize>, Vec<usize>)> = (0..balls.len())
        .into_par_iter()
        .map(|k| {
            let bk = balls[k];
            let inter: Vec<usize> = (0..k).filter(|&j| balls[j].intersects(space, bk)).collect();
            let comp = inter
                .iter()
                .copied()
                .filter(|&j| balls[j].radius <= 3.0 * bk.radius)
                .collect();
            (inter, comp)
        })
        .collect();
    let (intersecting, comparable): (Vec<_>, Vec<_>) = sets.into_iter().unzip();
    let max_intersecting = intersecting.iter().map(Vec::len).max().unwrap_or(0);
    let max_comparable = comparable.iter().map(Vec::len).max().unwrap_or(0);
    let max_far = intersecting
        .iter()
        .zip(&comparable)
        .map(|(i, m)| i.len() - m.len())
        .max()
        .unwrap_or(0);
    OverlapReport {
        intersecting,
        comparable,
        max_intersecting,
        max_comparable,
        max_far,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covering::{greedy_select, BallFamily, GeodesicBall};
    use crate::geometry::{ModelSpace, Point};

    fn select1(balls: &[(f64, f64)]) -> Selection {
        greedy_select(
            &BallFamily::new(
                ModelSpace::euclidean(1).unwrap(),
                balls
                    .iter()
                    .map(|&(c, r)| GeodesicBall::new(Point::new(vec![c]), r))
                    .collect(),
            )
            .unwrap(),
        )
    }

    #[test]
    fn disjoint_family_has_empty_sets() {
        let rep = overlap_sets(&select1(&[(0.0, 0.4), (1.0, 0.4), (2.0, 0.4)]));
        assert!(rep.intersecting.iter().all(Vec::is_empty));
        assert_eq!(rep.l_value(), 0);
    }

    #[test]
    fn unit_chain() {
        let sel = select1(&[(0.0, 1.0), (1.5, 1.0), (3.0, 1.0)]);
        assert_eq!(sel.chosen, vec![0, 1, 2]);
        let rep = overlap_sets(&sel);
        assert_eq!(rep.intersecting, vec![vec![], vec![0], vec![1]]);
        assert_eq!(rep.comparable, rep.intersecting);
        assert_eq!(rep.max_intersecting, 1);

        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "k,n_intersecting,n_comparable\n1,0,0\n2,1,1\n3,1,1\n"
        );
    }

    #[test]
    fn big_earlier_ball_is_far() {
        // D_1 = (−1, 1) radius 1, D_2 at 1.2 radius 0.25: r_1 > 3 r_2
        let sel = select1(&[(0.0, 1.0), (1.2, 0.25)]);
        let rep = overlap_sets(&sel);
        assert_eq!(rep.intersecting[1], vec![0]);
        assert!(rep.comparable[1].is_empty());
        assert_eq!(rep.far(1), vec![0]);
        assert_eq!(rep.max_far, 1);
    }
}
