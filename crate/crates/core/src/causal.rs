//! Causal structure of a finite 1+1 dimensional lattice.
//!
//! Cells are spacetime points `(x, t)` with unit light speed: `(x', t')` lies in
//! the causal future of `(x, t)` iff `t' >= t` and `|x' - x| <= t' - t`. Cones
//! are clipped at the spatial edges; there is no wraparound.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A `width x depth` lattice: sites `0..width`, time layers `0..depth`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Lattice {
    width: usize,
    depth: usize,
}

/// A spacetime cell. Orders lexicographically on `(x, t)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    pub x: usize,
    pub t: usize,
}

impl Cell {
    pub const fn new(x: usize, t: usize) -> Self {
        Self { x, t }
    }

    /// `self` is in the causal past of `other` (reflexive).
    pub fn precedes(&self, other: &Cell) -> bool {
        other.t >= self.t && self.x.abs_diff(other.x) <= other.t - self.t
    }

    pub fn causally_related(&self, other: &Cell) -> bool {
        self.precedes(other) || other.precedes(self)
    }

    pub fn spacelike_to(&self, other: &Cell) -> bool {
        !self.causally_related(other)
    }
}

impl Serialize for Cell {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.x, self.t].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Cell {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [x, t] = <[usize; 2]>::deserialize(d)?;
        Ok(Cell { x, t })
    }
}

/// A finite set of cells on one lattice.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Region {
    lattice: Lattice,
    cells: BTreeSet<Cell>,
}

impl Serialize for Region {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.cells.iter())
    }
}

impl Region {
    pub fn empty(lattice: Lattice) -> Self {
        Self {
            lattice,
            cells: BTreeSet::new(),
        }
    }

    pub fn new(lattice: Lattice, cells: impl IntoIterator<Item = Cell>) -> Result<Self> {
        let mut region = Self::empty(lattice);
        for c in cells {
            lattice.check_cell(c)?;
            region.cells.insert(c);
        }
        Ok(region)
    }

    /// Builds a region from `(x, t)` pairs.
    pub fn from_pairs(lattice: Lattice, pairs: &[(usize, usize)]) -> Result<Self> {
        Self::new(lattice, pairs.iter().map(|&(x, t)| Cell::new(x, t)))
    }

    pub fn full(lattice: Lattice) -> Self {
        Self {
            lattice,
            cells: lattice.cells().collect(),
        }
    }

    pub fn row(lattice: Lattice, t: usize) -> Result<Self> {
        Self::new(lattice, (0..lattice.width).map(|x| Cell::new(x, t)))
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    pub fn cells(&self) -> &BTreeSet<Cell> {
        &self.cells
    }

    pub fn iter(&self) -> impl Iterator<Item = &Cell> {
        self.cells.iter()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, c: &Cell) -> bool {
        self.cells.contains(c)
    }

    pub fn insert(&mut self, c: Cell) -> Result<()> {
        self.lattice.check_cell(c)?;
        self.cells.insert(c);
        Ok(())
    }

    /// Sorted `[x, t]` pairs, the serialised form.
    pub fn to_pairs(&self) -> Vec<[usize; 2]> {
        self.cells.iter().map(|c| [c.x, c.t]).collect()
    }

    pub fn union(&self, other: &Region) -> Region {
        Region {
            lattice: self.lattice,
            cells: self.cells.union(&other.cells).copied().collect(),
        }
    }

    pub fn intersection(&self, other: &Region) -> Region {
        Region {
            lattice: self.lattice,
            cells: self.cells.intersection(&other.cells).copied().collect(),
        }
    }

    pub fn difference(&self, other: &Region) -> Region {
        Region {
            lattice: self.lattice,
            cells: self.cells.difference(&other.cells).copied().collect(),
        }
    }

    pub fn is_subset(&self, other: &Region) -> bool {
        self.cells.is_subset(&other.cells)
    }

    pub fn is_disjoint(&self, other: &Region) -> bool {
        self.cells.is_disjoint(&other.cells)
    }

    pub fn min_time(&self) -> Option<usize> {
        self.cells.iter().map(|c| c.t).min()
    }

    pub fn max_time(&self) -> Option<usize> {
        self.cells.iter().map(|c| c.t).max()
    }

    /// Spatial sites touched by the region.
    pub fn sites(&self) -> BTreeSet<usize> {
        self.cells.iter().map(|c| c.x).collect()
    }
}

/// An achronal staircase `x -> t(x)` across the full width.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Slice {
    levels: Vec<usize>,
}

impl Slice {
    pub fn new(levels: Vec<usize>) -> Self {
        Self { levels }
    }

    pub fn constant(width: usize, t: usize) -> Self {
        Self {
            levels: vec![t; width],
        }
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn level(&self, x: usize) -> usize {
        self.levels[x]
    }

    pub fn is_staircase(&self) -> bool {
        self.levels.windows(2).all(|w| w[0].abs_diff(w[1]) <= 1)
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.levels
            .iter()
            .enumerate()
            .map(|(x, &t)| Cell::new(x, t))
    }

    pub fn region(&self, lattice: Lattice) -> Result<Region> {
        Region::new(lattice, self.cells())
    }

    /// Pointwise `self <= other`.
    pub fn below_or_equal(&self, other: &Slice) -> bool {
        self.levels
            .iter()
            .zip(&other.levels)
            .all(|(a, b)| a <= b)
    }
}

/// A linear arrangement of a region family, as indices into the input list.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CausalOrder {
    pub indices: Vec<usize>,
}

impl CausalOrder {
    pub fn regions<'a>(&self, family: &'a [Region]) -> Vec<&'a Region> {
        self.indices.iter().map(|&i| &family[i]).collect()
    }

    /// Position of `index` within the order.
    pub fn position(&self, index: usize) -> Option<usize> {
        self.indices.iter().position(|&i| i == index)
    }
}

impl Lattice {
    pub fn new(width: usize, depth: usize) -> Result<Self> {
        if width < 2 || depth < 1 {
            return Err(Error::InvalidLattice { width, depth });
        }
        Ok(Self { width, depth })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn num_cells(&self) -> usize {
        self.width * self.depth
    }

    pub fn contains(&self, c: Cell) -> bool {
        c.x < self.width && c.t < self.depth
    }

    pub fn check_cell(&self, c: Cell) -> Result<()> {
        if self.contains(c) {
            Ok(())
        } else {
            Err(Error::CellOutOfRange {
                x: c.x,
                t: c.t,
                width: self.width,
                depth: self.depth,
            })
        }
    }

    /// All cells, time-major.
    pub fn cells(&self) -> impl Iterator<Item = Cell> {
        let (w, d) = (self.width, self.depth);
        (0..d).flat_map(move |t| (0..w).map(move |x| Cell::new(x, t)))
    }

    fn index(&self, c: Cell) -> usize {
        c.t * self.width + c.x
    }

    fn mask(&self, r: &Region) -> Vec<bool> {
        let mut m = vec![false; self.num_cells()];
        for c in r.iter() {
            m[self.index(*c)] = true;
        }
        m
    }

    fn region_of_mask(&self, m: &[bool]) -> Region {
        Region {
            lattice: *self,
            cells: self.cells().filter(|c| m[self.index(*c)]).collect(),
        }
    }

    /// Neighbours of `x` one step in time: `x-1, x, x+1`, clipped.
    fn step_sites(&self, x: usize) -> impl Iterator<Item = usize> {
        let lo = x.saturating_sub(1);
        let hi = (x + 1).min(self.width - 1);
        lo..=hi
    }

    pub fn causal_future(&self, r: &Region) -> Region {
        let mut m = self.mask(r);
        for t in 1..self.depth {
            for x in 0..self.width {
                if !m[self.index(Cell::new(x, t))]
                    && self.step_sites(x).any(|y| m[self.index(Cell::new(y, t - 1))])
                {
                    m[self.index(Cell::new(x, t))] = true;
                }
            }
        }
        self.region_of_mask(&m)
    }

    pub fn causal_past(&self, r: &Region) -> Region {
        let mut m = self.mask(r);
        for t in (0..self.depth.saturating_sub(1)).rev() {
            for x in 0..self.width {
                if !m[self.index(Cell::new(x, t))]
                    && self.step_sites(x).any(|y| m[self.index(Cell::new(y, t + 1))])
                {
                    m[self.index(Cell::new(x, t))] = true;
                }
            }
        }
        self.region_of_mask(&m)
    }

    /// Cells neither in the causal future nor the causal past of `k`.
    pub fn causal_complement(&self, k: &Region) -> Region {
        Region::full(*self)
            .difference(&self.causal_future(k))
            .difference(&self.causal_past(k))
    }

    pub fn causal_hull(&self, n: &Region) -> Region {
        self.causal_future(n).intersection(&self.causal_past(n))
    }

    pub fn is_causally_convex(&self, n: &Region) -> bool {
        &self.causal_hull(n) == n
    }

    /// Cells every inextendible causal path through which meets `n`.
    ///
    /// Paths advance one layer per step with `|dx| <= 1` and run from `t = 0`
    /// to `t = depth - 1`; spatial edges do not terminate them. A full path
    /// avoids `n` iff it is the join of an avoiding past segment and an
    /// avoiding future segment, so membership reduces to two sweeps.
    pub fn domain_of_dependence(&self, n: &Region) -> Region {
        let inside = self.mask(n);
        let len = self.num_cells();
        let mut past_escape = vec![false; len];
        for t in 0..self.depth {
            for x in 0..self.width {
                let i = self.index(Cell::new(x, t));
                if inside[i] {
                    continue;
                }
                past_escape[i] = t == 0
                    || self
                        .step_sites(x)
                        .any(|y| past_escape[self.index(Cell::new(y, t - 1))]);
            }
        }
        let mut future_escape = vec![false; len];
        for t in (0..self.depth).rev() {
            for x in 0..self.width {
                let i = self.index(Cell::new(x, t));
                if inside[i] {
                    continue;
                }
                future_escape[i] = t + 1 == self.depth
                    || self
                        .step_sites(x)
                        .any(|y| future_escape[self.index(Cell::new(y, t + 1))]);
            }
        }
        let m: Vec<bool> = (0..len)
            .map(|i| !(past_escape[i] && future_escape[i]))
            .collect();
        self.region_of_mask(&m)
    }

    /// Connectivity with king moves (`|dx| <= 1`, `|dt| <= 1`).
    pub fn components(&self, r: &Region) -> Vec<Region> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for &start in r.iter() {
            if seen.contains(&start) {
                continue;
            }
            let mut comp = BTreeSet::new();
            let mut queue = VecDeque::from([start]);
            seen.insert(start);
            while let Some(c) = queue.pop_front() {
                comp.insert(c);
                for n in r.iter() {
                    if !seen.contains(n) && c.x.abs_diff(n.x) <= 1 && c.t.abs_diff(n.t) <= 1 {
                        seen.insert(*n);
                        queue.push_back(*n);
                    }
                }
            }
            out.push(Region {
                lattice: *self,
                cells: comp,
            });
        }
        out
    }

    /// A region is connected when its causal hull forms one component.
    pub fn is_connected(&self, k: &Region) -> bool {
        self.components(&self.causal_hull(k)).len() <= 1
    }

    /// Union of the components of `causal_hull(k)` that contain cells of `k`.
    pub fn connected_hull(&self, k: &Region) -> Region {
        let hull = self.causal_hull(k);
        let mut out = Region::empty(*self);
        for comp in self.components(&hull) {
            if !comp.is_disjoint(k) {
                out = out.union(&comp);
            }
        }
        out
    }

    /// `J^-(first) ∩ J^+(second) = ∅`, i.e. `first` may precede `second`.
    pub fn may_precede(&self, first: &Region, second: &Region) -> bool {
        self.causal_past(first)
            .is_disjoint(&self.causal_future(second))
    }

    pub fn is_causal_order(&self, sequence: &[&Region]) -> bool {
        sequence.iter().enumerate().all(|(i, a)| {
            sequence[i + 1..]
                .iter()
                .all(|b| self.may_precede(a, b))
        })
    }

    pub fn is_causally_orderable(&self, regions: &[Region]) -> bool {
        !self.enumerate_causal_orders_limited(regions, 1).is_empty()
    }

    /// Every permutation satisfying the causal-order condition, in
    /// lexicographic order of indices.
    pub fn enumerate_causal_orders(&self, regions: &[Region]) -> Vec<CausalOrder> {
        self.enumerate_causal_orders_limited(regions, usize::MAX)
    }

    fn enumerate_causal_orders_limited(&self, regions: &[Region], limit: usize) -> Vec<CausalOrder> {
        let n = regions.len();
        // before[i][j]: i may be placed before j
        let before: Vec<Vec<bool>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| i == j || self.may_precede(&regions[i], &regions[j]))
                    .collect()
            })
            .collect();
        let mut out = Vec::new();
        let mut current = Vec::with_capacity(n);
        let mut used = vec![false; n];
        fn rec(
            before: &[Vec<bool>],
            current: &mut Vec<usize>,
            used: &mut [bool],
            out: &mut Vec<CausalOrder>,
            limit: usize,
        ) {
            if out.len() >= limit {
                return;
            }
            let n = before.len();
            if current.len() == n {
                out.push(CausalOrder {
                    indices: current.clone(),
                });
                return;
            }
            for j in 0..n {
                if used[j] || !current.iter().all(|&i| before[i][j]) {
                    continue;
                }
                used[j] = true;
                current.push(j);
                rec(before, current, used, out, limit);
                current.pop();
                used[j] = false;
            }
        }
        rec(&before, &mut current, &mut used, &mut out, limit);
        out
    }

    /// Whether every time-maximal causal path meets the slice exactly once.
    pub fn is_cauchy_slice(&self, slice: &Slice) -> bool {
        if slice.levels.len() != self.width || slice.levels.iter().any(|&t| t >= self.depth) {
            return false;
        }
        // (min hits, max hits) over path prefixes ending at each cell
        let on = |x: usize, t: usize| usize::from(slice.levels[x] == t);
        let mut prev: Vec<(usize, usize)> = (0..self.width).map(|x| (on(x, 0), on(x, 0))).collect();
        for t in 1..self.depth {
            let cur: Vec<(usize, usize)> = (0..self.width)
                .map(|x| {
                    let lo = self.step_sites(x).map(|y| prev[y].0).min().unwrap();
                    let hi = self.step_sites(x).map(|y| prev[y].1).max().unwrap();
                    (lo + on(x, t), hi + on(x, t))
                })
                .collect();
            prev = cur;
        }
        prev.iter().all(|&(lo, hi)| lo == 1 && hi == 1)
    }

    /// A Cauchy slice avoiding `J^-(k1) ∪ J^+(k2) ∪ J^+(l)` with `k1` strictly
    /// below it.
    ///
    /// The search is exhaustive over staircases; among valid slices the
    /// pointwise-earliest is returned (falling back to the smallest level sum,
    /// then lexicographic order, if no pointwise minimum exists).
    pub fn find_separating_slice(&self, k1: &Region, k2: &Region, l: &Region) -> Result<Slice> {
        let past_k1 = self.causal_past(k1);
        let mut violations = Vec::new();
        if !k2.is_disjoint(&past_k1) {
            violations.push("k2 meets the causal past of k1".to_string());
        }
        if !l.is_disjoint(&past_k1) {
            violations.push("l meets the causal past of k1".to_string());
        }
        if !violations.is_empty() {
            return Err(Error::GeometryViolation(violations));
        }
        let forbidden = self.mask(
            &past_k1
                .union(&self.causal_future(k2))
                .union(&self.causal_future(l)),
        );
        let mut valid: Vec<Slice> = Vec::new();
        let mut levels = Vec::with_capacity(self.width);
        self.staircases(&forbidden, &mut levels, &mut |s: &[usize]| {
            let slice = Slice::new(s.to_vec());
            let above_k1 = k1.iter().all(|c| c.t < slice.levels[c.x]);
            if above_k1 && self.is_cauchy_slice(&slice) {
                valid.push(slice);
            }
        });
        if valid.is_empty() {
            return Err(Error::NoSliceFound);
        }
        if let Some(min) = valid
            .iter()
            .find(|s| valid.iter().all(|o| s.below_or_equal(o)))
        {
            return Ok(min.clone());
        }
        valid.sort_by_key(|s| (s.levels.iter().sum::<usize>(), s.levels.clone()));
        Ok(valid.swap_remove(0))
    }

    fn staircases(&self, forbidden: &[bool], levels: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
        let x = levels.len();
        if x == self.width {
            visit(levels);
            return;
        }
        let range: Vec<usize> = match levels.last() {
            None => (0..self.depth).collect(),
            Some(&p) => (p.saturating_sub(1)..=(p + 1).min(self.depth - 1)).collect(),
        };
        for t in range {
            if forbidden[self.index(Cell::new(x, t))] {
                continue;
            }
            levels.push(t);
            self.staircases(forbidden, levels, visit);
            levels.pop();
        }
    }
}

/// A pointlike worldline: strictly increasing in time with consecutive cells
/// causally related.
pub fn validate_probe_worldline(cells: &[Cell]) -> bool {
    cells
        .windows(2)
        .all(|w| w[1].t > w[0].t && w[0].x.abs_diff(w[1].x) <= w[1].t - w[0].t)
}
