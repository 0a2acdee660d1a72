use super::{BallFamily, GeodesicBall};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// The ordered output D₁, …, D_J of the greedy selection.
///
/// `chosen[j]` indexes `family.balls()`; `sup_records[j]` is the supremum of
/// the radii of balls whose centers were still uncovered when step j ran.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SelectionFile")]
pub struct Selection {
    pub family: BallFamily,
    pub chosen: Vec<usize>,
    pub sup_records: Vec<f64>,
}

#[derive(Deserialize)]
struct SelectionFile {
    family: BallFamily,
    chosen: Vec<usize>,
    sup_records: Vec<f64>,
}

impl TryFrom<SelectionFile> for Selection {
    type Error = Error;

    fn try_from(f: SelectionFile) -> Result<Self> {
        Selection::from_parts(f.family, f.chosen, f.sup_records)
    }
}

impl Selection {
    /// Assemble a selection without re-checking the selection rule, e.g. one
    /// loaded from disk that is about to be audited.
    pub fn from_parts(
        family: BallFamily,
        chosen: Vec<usize>,
        sup_records: Vec<f64>,
    ) -> Result<Self> {
        if chosen.is_empty() {
            return Err(Error::invalid("selection is empty"));
        }
        if chosen.len() != sup_records.len() {
            return Err(Error::invalid("chosen and sup_records differ in length"));
        }
        if let Some(bad) = chosen.iter().find(|&&i| i >= family.len()) {
            return Err(Error::invalid(format!("chosen index {bad} out of range")));
        }
        Ok(Self {
            family,
            chosen,
            sup_records,
        })
    }

    pub fn len(&self) -> usize {
        self.chosen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chosen.is_empty()
    }

    /// Ball D_{j+1} (0-based step `j`).
    pub fn ball(&self, j: usize) -> &GeodesicBall {
        &self.family.balls()[self.chosen[j]]
    }

    pub fn balls(&self) -> impl Iterator<Item = &GeodesicBall> {
        self.chosen.iter().map(|&i| &self.family.balls()[i])
    }

    pub fn radii(&self) -> Vec<f64> {
        self.balls().map(|b| b.radius).collect()
    }
}

/// Greedy selection: at each step take, among balls whose center is not yet
/// covered by the previously chosen balls, one of maximal radius (smallest
/// family index on ties). Since the supremum is attained, the choice
/// satisfies r_j > ¾·sup strictly. Terminates once every center is covered.
pub fn greedy_select(family: &BallFamily) -> Selection {
    let space = family.space();
    let balls = family.balls();
    let mut order: Vec<usize> = (0..balls.len()).collect();
    order.sort_by(|&a, &b| balls[b].radius.total_cmp(&balls[a].radius).then(a.cmp(&b)));

    let mut covered = vec![false; balls.len()];
    let mut chosen = Vec::new();
    let mut sup_records = Vec::new();
    for &idx in &order {
        if covered[idx] {
            continue;
        }
        let pick = &balls[idx];
        chosen.push(idx);
        sup_records.push(pick.radius);
        for (flag, b) in covered.iter_mut().zip(balls) {
            if !*flag && pick.contains(space, &b.center) {
                *flag = true;
            }
        }
        // the chosen center lies in its own ball
        covered[idx] = true;
    }
    Selection {
        family: family.clone(),
        chosen,
        sup_records,
    }
}
