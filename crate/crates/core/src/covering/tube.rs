//! Breadth-first search over orbit points of the origin lying in a tube around
//! a polyline, each carrying its own frame.

use std::collections::HashMap;

use super::frame::{FrameLine, M3};
use super::reference::letter_code;
use crate::surface_group::{Letter, Word};

/// A piece `[lo, hi]` (global parameters) of a geodesic.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Piece {
    pub line: FrameLine,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct Node {
    parent: usize,
    letter: Option<Letter>,
    /// One frame line per piece.
    pub frames: Vec<FrameLine>,
}

#[derive(Debug)]
pub(crate) struct Tube {
    pub nodes: Vec<Node>,
    /// Smallest polyline distance among rejected orbit points.
    pub min_rejected: f64,
}

impl Tube {
    /// The word `v` with the node's orbit point equal to `ρ₀(v)·o`.
    pub fn word(&self, mut i: usize) -> Word {
        let mut letters = Vec::new();
        while let Some(l) = self.nodes[i].letter {
            letters.push(l);
            i = self.nodes[i].parent;
        }
        letters.reverse();
        Word::from_letters(letters)
    }
}

const CELL: f64 = 0.05;
const SAME: f64 = 1e-6;

/// Visits every orbit point within `radius` of the polyline that is connected
/// to the origin through such points by generator steps.
pub(crate) fn search(steps: &[M3], letters: &[Letter], pieces: &[Piece], radius: f64) -> Tube {
    let distance = |frames: &[FrameLine]| {
        frames
            .iter()
            .zip(pieces)
            .map(|(f, p)| f.distance_to_piece(p.lo, p.hi))
            .fold(f64::INFINITY, f64::min)
    };
    let root = Node { parent: usize::MAX, letter: None, frames: pieces.iter().map(|p| p.line).collect() };
    let mut seen: HashMap<(i64, i64), Vec<(f64, f64)>> = HashMap::new();
    let key = |f: &FrameLine| {
        let (s, d) = f.fermi();
        ((s, d), ((s / CELL).round() as i64, (d / CELL).round() as i64))
    };
    let (coords, cell) = key(&root.frames[0]);
    seen.entry(cell).or_default().push(coords);
    let mut nodes = vec![root];
    let mut min_rejected = f64::INFINITY;
    let mut head = 0;
    while head < nodes.len() {
        let last = nodes[head].letter;
        for &l in letters {
            if last == Some(l.inv()) {
                continue;
            }
            let step = &steps[letter_code(l)];
            let frames: Vec<FrameLine> = nodes[head].frames.iter().map(|f| f.transform(step)).collect();
            let ((s, d), (cs, cd)) = key(&frames[0]);
            let known = (cs - 1..=cs + 1).any(|i| {
                (cd - 1..=cd + 1).any(|j| {
                    seen.get(&(i, j))
                        .is_some_and(|v| v.iter().any(|&(s2, d2)| (s - s2).abs() < SAME && (d - d2).abs() < SAME))
                })
            });
            if known {
                continue;
            }
            let dist = distance(&frames);
            if dist > radius {
                min_rejected = min_rejected.min(dist);
                continue;
            }
            seen.entry((cs, cd)).or_default().push((s, d));
            nodes.push(Node { parent: head, letter: Some(l), frames });
        }
        head += 1;
    }
    Tube { nodes, min_rejected }
}
