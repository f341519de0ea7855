//! Cell-centred grids and occupancy masks.

use crate::norm::Vec2;

/// Uniform grid of `nx * ny` cells over an axis-aligned box; nodes sit at cell centres.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub x0: f64,
    pub y0: f64,
    pub hx: f64,
    pub hy: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Grid {
    pub fn new(x: (f64, f64), y: (f64, f64), nx: usize, ny: usize) -> Grid {
        Grid { x0: x.0, y0: y.0, hx: (x.1 - x.0) / nx as f64, hy: (y.1 - y.0) / ny as f64, nx, ny }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn coords(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    #[inline]
    pub fn center(&self, i: usize, j: usize) -> Vec2 {
        Vec2::new(self.x0 + (i as f64 + 0.5) * self.hx, self.y0 + (j as f64 + 0.5) * self.hy)
    }

    #[inline]
    pub fn center_of(&self, k: usize) -> Vec2 {
        let (i, j) = self.coords(k);
        self.center(i, j)
    }

    /// Larger of the two cell sides.
    pub fn h(&self) -> f64 {
        self.hx.max(self.hy)
    }

    pub fn x1(&self) -> f64 {
        self.x0 + self.hx * self.nx as f64
    }

    pub fn y1(&self) -> f64 {
        self.y0 + self.hy * self.ny as f64
    }

    pub fn in_box(&self, p: Vec2) -> bool {
        p.x >= self.x0 && p.x <= self.x1() && p.y >= self.y0 && p.y <= self.y1()
    }

    /// Cell containing `p`, clamped to the box for points on its edge.
    pub fn cell_of(&self, p: Vec2) -> Option<(usize, usize)> {
        if !self.in_box(p) {
            return None;
        }
        let i = (((p.x - self.x0) / self.hx).floor() as usize).min(self.nx - 1);
        let j = (((p.y - self.y0) / self.hy).floor() as usize).min(self.ny - 1);
        Some((i, j))
    }

    /// Continuous node coordinates: node `(i, j)` sits at `(i, j)`.
    #[inline]
    pub fn to_node(&self, p: Vec2) -> (f64, f64) {
        ((p.x - self.x0) / self.hx - 0.5, (p.y - self.y0) / self.hy - 0.5)
    }

    pub fn diameter(&self) -> f64 {
        ((self.x1() - self.x0).powi(2) + (self.y1() - self.y0).powi(2)).sqrt()
    }
}

/// Bitset over grid cells.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mask {
    nx: usize,
    ny: usize,
    bits: Vec<u64>,
}

impl Mask {
    pub fn new(nx: usize, ny: usize) -> Mask {
        Mask { nx, ny, bits: vec![0; (nx * ny).div_ceil(64)] }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.get_index(j * self.nx + i)
    }

    #[inline]
    pub fn get_index(&self, k: usize) -> bool {
        self.bits[k / 64] >> (k % 64) & 1 == 1
    }

    /// Out-of-range coordinates read as unoccupied.
    pub fn get_signed(&self, i: isize, j: isize) -> bool {
        i >= 0 && j >= 0 && (i as usize) < self.nx && (j as usize) < self.ny && self.get(i as usize, j as usize)
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, on: bool) {
        self.set_index(j * self.nx + i, on);
    }

    #[inline]
    pub fn set_index(&mut self, k: usize, on: bool) {
        if on {
            self.bits[k / 64] |= 1 << (k % 64);
        } else {
            self.bits[k / 64] &= !(1 << (k % 64));
        }
    }

    pub fn count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|w| *w == 0)
    }

    /// Occupied cells in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let nx = self.nx;
        (0..self.nx * self.ny).filter(|k| self.get_index(*k)).map(move |k| (k % nx, k / nx))
    }

    /// Cells whose full 3x3 neighbourhood is occupied.
    pub fn eroded(&self) -> Mask {
        let mut out = Mask::new(self.nx, self.ny);
        for (i, j) in self.iter() {
            let (ii, jj) = (i as isize, j as isize);
            let all = (-1..=1).all(|dj| (-1..=1).all(|di| self.get_signed(ii + di, jj + dj)));
            if all {
                out.set(i, j, true);
            }
        }
        out
    }

    /// Cells within `r` (Chebyshev) of an occupied cell.
    pub fn dilated(&self, r: usize) -> Mask {
        let mut out = Mask::new(self.nx, self.ny);
        let r = r as isize;
        for (i, j) in self.iter() {
            for dj in -r..=r {
                for di in -r..=r {
                    let (a, b) = (i as isize + di, j as isize + dj);
                    if a >= 0 && b >= 0 && (a as usize) < self.nx && (b as usize) < self.ny {
                        out.set(a as usize, b as usize, true);
                    }
                }
            }
        }
        out
    }

    pub fn union_with(&mut self, other: &Mask) {
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= *b;
        }
    }

    pub fn intersection(&self, other: &Mask) -> Mask {
        let bits = self.bits.iter().zip(&other.bits).map(|(a, b)| a & b).collect();
        Mask { nx: self.nx, ny: self.ny, bits }
    }

    /// Cells in `self` but not in `other`.
    pub fn difference(&self, other: &Mask) -> Mask {
        let bits = self.bits.iter().zip(&other.bits).map(|(a, b)| a & !b).collect();
        Mask { nx: self.nx, ny: self.ny, bits }
    }

    pub fn is_subset_of(&self, other: &Mask) -> bool {
        self.bits.iter().zip(&other.bits).all(|(a, b)| a & !b == 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_lookup_round_trips() {
        let g = Grid::new((-1.0, 1.0), (0.0, 4.0), 20, 40);
        for k in [0, 7, 399, 799] {
            let (i, j) = g.coords(k);
            assert_eq!(g.cell_of(g.center(i, j)), Some((i, j)));
        }
        assert_eq!(g.cell_of(Vec2::new(1.0, 4.0)), Some((19, 39)));
        assert_eq!(g.cell_of(Vec2::new(1.1, 0.0)), None);
    }

    #[test]
    fn mask_morphology() {
        let mut m = Mask::new(10, 10);
        for j in 2..7 {
            for i in 3..8 {
                m.set(i, j, true);
            }
        }
        assert_eq!(m.count(), 25);
        assert_eq!(m.eroded().count(), 9);
        assert_eq!(m.dilated(1).count(), 49);
        assert!(m.eroded().is_subset_of(&m));
        assert!(m.difference(&m.eroded()).count() == 16);
    }
}
