//! Plane trees with a degree-1 root.
//!
//! A tree is stored as its depth-first outdegree word over the vertices below
//! the root `r`. The first letter is the outdegree of `s`, the unique
//! neighbour of `r`. The word has one letter per edge, so a tree in `Gamma_N`
//! has a word of length `N`. The empty word is the degenerate tree consisting
//! of `r` alone.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Result, SgError};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PlaneTree {
    outdeg: Vec<usize>,
}

/// True iff every proper prefix of `(d_i - 1)` sums to at least 0 and the
/// whole word sums to -1.
pub fn is_lukasiewicz(word: &[usize]) -> bool {
    if word.is_empty() {
        return false;
    }
    let mut height: i64 = 0;
    for (i, &d) in word.iter().enumerate() {
        height += d as i64 - 1;
        if height < 0 {
            return i + 1 == word.len();
        }
    }
    false
}

impl PlaneTree {
    pub fn from_outdeg(outdeg: Vec<usize>) -> Result<PlaneTree> {
        if !outdeg.is_empty() && !is_lukasiewicz(&outdeg) {
            return Err(SgError::InvalidTree(format!("{outdeg:?} is not a Lukasiewicz word")));
        }
        Ok(PlaneTree { outdeg })
    }

    pub(crate) fn from_outdeg_unchecked(outdeg: Vec<usize>) -> PlaneTree {
        debug_assert!(outdeg.is_empty() || is_lukasiewicz(&outdeg));
        PlaneTree { outdeg }
    }

    /// The tree consisting of `r` alone.
    pub fn degenerate() -> PlaneTree {
        PlaneTree { outdeg: Vec::new() }
    }

    /// `s` with `edges - 1` leaf children.
    pub fn star(edges: usize) -> PlaneTree {
        assert!(edges >= 1, "a star needs at least the edge r-s");
        let mut outdeg = vec![0; edges];
        outdeg[0] = edges - 1;
        PlaneTree { outdeg }
    }

    /// The path `r - s - ... ` with `edges` edges.
    pub fn path(edges: usize) -> PlaneTree {
        assert!(edges >= 1, "a path needs at least the edge r-s");
        let mut outdeg = vec![1; edges];
        outdeg[edges - 1] = 0;
        PlaneTree { outdeg }
    }

    pub fn outdeg(&self) -> &[usize] {
        &self.outdeg
    }

    /// Number of edges `N`, equal to the number of vertices other than `r`.
    pub fn edges(&self) -> usize {
        self.outdeg.len()
    }

    pub fn is_degenerate(&self) -> bool {
        self.outdeg.is_empty()
    }

    pub fn sigma_s(&self) -> Option<usize> {
        self.outdeg.first().map(|d| d + 1)
    }

    /// Subtree vertex counts, indexed like the word.
    pub fn subtree_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.outdeg.len()];
        let mut stack: Vec<usize> = Vec::new();
        for i in (0..self.outdeg.len()).rev() {
            let mut size = 1;
            for _ in 0..self.outdeg[i] {
                size += stack.pop().expect("valid word");
            }
            sizes[i] = size;
            stack.push(size);
        }
        sizes
    }

    /// Word positions of the children of every vertex, left to right.
    pub fn children(&self) -> Vec<Vec<usize>> {
        let sizes = self.subtree_sizes();
        self.outdeg
            .iter()
            .enumerate()
            .map(|(v, &d)| {
                let mut next = v + 1;
                (0..d)
                    .map(|_| {
                        let c = next;
                        next += sizes[c];
                        c
                    })
                    .collect()
            })
            .collect()
    }

    pub fn degree_profile(&self) -> DegreeProfile {
        let mut counts = vec![0usize; 2];
        // r is a leaf unless the tree has no edges at all
        counts[usize::from(!self.outdeg.is_empty())] = 1;
        for &d in &self.outdeg {
            let sigma = d + 1;
            if sigma >= counts.len() {
                counts.resize(sigma + 1, 0);
            }
            counts[sigma] += 1;
        }
        let max_non_s_degree = self.outdeg.iter().skip(1).map(|d| d + 1).max().unwrap_or(1);
        DegreeProfile {
            max_degree: counts.iter().rposition(|&c| c > 0).unwrap_or(0),
            sigma_s: self.sigma_s(),
            max_non_s_degree,
            counts,
        }
    }

    /// Vertex counts of the `sigma(s) - 1` branches hanging below `s`.
    pub fn branch_sizes(&self) -> Vec<usize> {
        if self.outdeg.is_empty() {
            return Vec::new();
        }
        let mut out = Vec::with_capacity(self.outdeg[0]);
        let mut pos = 1;
        let mut need = 0i64;
        let mut start = 1;
        while pos < self.outdeg.len() {
            need += self.outdeg[pos] as i64 - 1;
            pos += 1;
            if need < 0 {
                out.push(pos - start);
                start = pos;
                need = 0;
            }
        }
        out
    }

    /// Height measured in edges from `r` (0 for the degenerate tree).
    pub fn height(&self) -> usize {
        let mut best = 0;
        let mut stack: Vec<usize> = Vec::new();
        for &d in &self.outdeg {
            let depth = stack.len() + 1;
            best = best.max(depth);
            if let Some(top) = stack.last_mut() {
                *top -= 1;
            }
            if d > 0 {
                stack.push(d);
            } else {
                while stack.last() == Some(&0) {
                    stack.pop();
                }
            }
        }
        best
    }

    /// Keeps vertices whose depth below `s` is at most `max_depth`, and of each
    /// kept vertex at most `cap` leftmost children.
    fn truncate(&self, max_depth: usize, cap: usize) -> PlaneTree {
        if self.outdeg.is_empty() {
            return PlaneTree::degenerate();
        }
        let children = self.children();
        let mut out = Vec::new();
        let mut stack = vec![(0usize, 0usize)];
        while let Some((v, depth)) = stack.pop() {
            let kept = if depth == max_depth {
                0
            } else {
                self.outdeg[v].min(cap)
            };
            out.push(kept);
            for &c in children[v][..kept].iter().rev() {
                stack.push((c, depth + 1));
            }
        }
        PlaneTree::from_outdeg_unchecked(out)
    }

    /// Graph ball of radius `R` around `r`.
    pub fn ball(&self, radius: usize) -> PlaneTree {
        if radius == 0 {
            return PlaneTree::degenerate();
        }
        self.truncate(radius - 1, usize::MAX)
    }

    /// Left ball `L_R`: within the ball of radius `R`, every vertex keeps its
    /// `R - 1` leftmost children, so no kept vertex has degree above `R`.
    pub fn left_ball(&self, radius: usize) -> PlaneTree {
        if radius == 0 {
            return PlaneTree::degenerate();
        }
        self.truncate(radius - 1, radius - 1)
    }

    /// Whether the Ulam-Harris vertex set of `self` is contained in that of
    /// `other`.
    pub fn is_left_subtree_of(&self, other: &PlaneTree) -> bool {
        if self.outdeg.is_empty() {
            return true;
        }
        if other.outdeg.is_empty() {
            return false;
        }
        let (ca, cb) = (self.children(), other.children());
        let mut stack = vec![(0usize, 0usize)];
        while let Some((u, v)) = stack.pop() {
            if self.outdeg[u] > other.outdeg[v] {
                return false;
            }
            stack.extend(ca[u].iter().copied().zip(cb[v].iter().copied()));
        }
        true
    }
}

/// Metric `d(t1, t2) = inf { 1/(R+1) : L_R(t1) = L_R(t2) }`, zero for equal
/// trees.
pub fn tree_distance(t1: &PlaneTree, t2: &PlaneTree) -> Ratio<u64> {
    if t1 == t2 {
        return Ratio::from_integer(0);
    }
    // L_0 always agrees; distinct finite trees disagree once R exceeds both
    // sizes.
    let mut radius = 1;
    while t1.left_ball(radius) == t2.left_ball(radius) {
        radius += 1;
    }
    Ratio::new(1, radius as u64)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DegreeProfile {
    /// `counts[i]` is `X_i`, the number of vertices of degree `i`, with `r`
    /// counted in `X_1`.
    pub counts: Vec<usize>,
    pub max_degree: usize,
    pub sigma_s: Option<usize>,
    /// Largest degree among vertices other than `s` (1 when there are none).
    pub max_non_s_degree: usize,
}

impl DegreeProfile {
    pub fn x(&self, degree: usize) -> usize {
        self.counts.get(degree).copied().unwrap_or(0)
    }

    pub fn vertex_count(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn degree_sum(&self) -> usize {
        self.counts.iter().enumerate().map(|(i, x)| i * x).sum()
    }
}

impl fmt::Display for PlaneTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for d in &self.outdeg {
            if !first {
                f.write_str(" ")?;
            }
            write!(f, "{d}")?;
            first = false;
        }
        Ok(())
    }
}

impl FromStr for PlaneTree {
    type Err = SgError;

    fn from_str(s: &str) -> Result<PlaneTree> {
        let word = s
            .split_whitespace()
            .map(|tok| {
                tok.parse::<usize>()
                    .map_err(|_| SgError::Format(format!("'{tok}' is not an outdegree")))
            })
            .collect::<Result<Vec<_>>>()?;
        PlaneTree::from_outdeg(word)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(word: &[usize]) -> PlaneTree {
        PlaneTree::from_outdeg(word.to_vec()).unwrap()
    }

    #[test]
    fn lukasiewicz_validation() {
        assert!(is_lukasiewicz(&[0]));
        assert!(is_lukasiewicz(&[2, 0, 0]));
        assert!(is_lukasiewicz(&[1, 1, 0]));
        assert!(!is_lukasiewicz(&[0, 2, 0]));
        assert!(!is_lukasiewicz(&[1, 0, 0]));
        assert!(!is_lukasiewicz(&[2, 0]));
        assert!(PlaneTree::from_outdeg(vec![0, 0]).is_err());
        assert!(PlaneTree::from_outdeg(vec![]).unwrap().is_degenerate());
    }

    #[test]
    fn degree_profile_examples() {
        let star = PlaneTree::star(5);
        assert_eq!(star.outdeg(), &[4, 0, 0, 0, 0]);
        let p = star.degree_profile();
        assert_eq!(p.sigma_s, Some(5));
        assert_eq!(p.x(1), 5);
        assert_eq!(p.x(5), 1);
        assert_eq!(p.max_non_s_degree, 1);

        let path = PlaneTree::path(3);
        let p = path.degree_profile();
        assert_eq!((p.x(1), p.x(2)), (2, 2));
        assert_eq!(p.vertex_count(), 4);
        assert_eq!(p.degree_sum(), 6);
    }

    #[test]
    fn branches() {
        assert_eq!(PlaneTree::star(6).branch_sizes(), vec![1; 5]);
        assert_eq!(PlaneTree::path(3).branch_sizes(), vec![2]);
        // s with children: leaf, pendant path of length 2, leaf
        assert_eq!(t(&[3, 0, 1, 0, 0]).branch_sizes(), vec![1, 2, 1]);
        assert_eq!(PlaneTree::star(1).branch_sizes(), Vec::<usize>::new());
        let w = t(&[2, 2, 0, 1, 0, 0]);
        let sizes = w.subtree_sizes();
        assert_eq!(sizes, vec![6, 4, 1, 2, 1, 1]);
        assert_eq!(w.children()[0], vec![1, 5]);
        assert_eq!(w.branch_sizes(), vec![4, 1]);
    }

    #[test]
    fn heights() {
        assert_eq!(PlaneTree::degenerate().height(), 0);
        assert_eq!(PlaneTree::star(4).height(), 2);
        assert_eq!(PlaneTree::path(5).height(), 5);
        assert_eq!(t(&[2, 0, 1, 1, 0]).height(), 4);
    }

    #[test]
    fn balls() {
        let path = PlaneTree::path(3);
        assert!(path.ball(0).is_degenerate());
        assert_eq!(path.ball(2), PlaneTree::path(2));
        assert_eq!(path.ball(3), path);
        assert_eq!(path.ball(10), path);
        let w = t(&[2, 2, 0, 1, 0, 0]);
        assert_eq!(w.ball(2), t(&[2, 0, 0]));
    }

    #[test]
    fn left_balls() {
        assert_eq!(PlaneTree::star(10).left_ball(4), PlaneTree::star(4));
        assert_eq!(PlaneTree::star(10).left_ball(4), PlaneTree::star(20).left_ball(4));
        assert_eq!(PlaneTree::star(10).left_ball(1), PlaneTree::star(1));
        let small = t(&[2, 1, 0, 0]);
        assert_eq!(small.left_ball(3), small);
        assert_eq!(t(&[3, 3, 0, 0, 0, 0, 0]).left_ball(3), t(&[2, 2, 0, 0, 0]));
    }

    #[test]
    fn distances() {
        let a = PlaneTree::path(2);
        let b = PlaneTree::path(3);
        assert_eq!(tree_distance(&a, &a), Ratio::from_integer(0));
        assert_eq!(tree_distance(&a, &b), Ratio::new(1, 3));
        assert_eq!(tree_distance(&b, &a), Ratio::new(1, 3));
        assert_eq!(tree_distance(&PlaneTree::degenerate(), &a), Ratio::new(1, 1));
        assert_eq!(tree_distance(&PlaneTree::star(10), &PlaneTree::star(20)), Ratio::new(1, 11));
    }

    #[test]
    fn left_subtrees() {
        let two_branch = t(&[2, 1, 0, 0]); // s: (child with child, leaf)
        let other = t(&[2, 0, 1, 0]); // s: (leaf, child with child)
        assert!(two_branch.is_left_subtree_of(&two_branch));
        assert!(PlaneTree::star(1).is_left_subtree_of(&other));
        assert!(PlaneTree::degenerate().is_left_subtree_of(&other));
        // r-s-a is contained in both
        assert!(PlaneTree::path(2).is_left_subtree_of(&two_branch));
        assert!(PlaneTree::path(2).is_left_subtree_of(&other));
        // r-s-a-b needs vertex 11, which only the first tree has
        assert!(PlaneTree::path(3).is_left_subtree_of(&two_branch));
        assert!(!PlaneTree::path(3).is_left_subtree_of(&other));
        assert!(!a_star_in_path());
    }

    fn a_star_in_path() -> bool {
        PlaneTree::star(3).is_left_subtree_of(&PlaneTree::path(3))
    }

    #[test]
    fn text_format() {
        let w = t(&[2, 0, 1, 0]);
        assert_eq!(w.to_string(), "2 0 1 0");
        assert_eq!("2 0 1 0".parse::<PlaneTree>().unwrap(), w);
        assert!("2 0".parse::<PlaneTree>().is_err());
        assert!("a".parse::<PlaneTree>().is_err());
        assert!("".parse::<PlaneTree>().unwrap().is_degenerate());
    }
}
