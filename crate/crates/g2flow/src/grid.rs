//! Periodic anisotropic grids on T⁷ and their derivative stencils.

use crate::error::{invalid, Result};
use crate::exterior::N;
use std::f64::consts::TAU;

/// First-derivative stencil along each axis, stored as circulant weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Stencil {
    Central2,
    Central4,
    /// Exact differentiation of trigonometric polynomials below the Nyquist
    /// frequency; used as a reference.
    Spectral,
}

#[derive(Debug, Clone)]
pub struct TorusGrid {
    n: [usize; N],
    len: [f64; N],
    stencil: Stencil,
    strides: [usize; N],
    /// Per axis: (offset mod n, weight); empty for constant axes.
    weights: [Vec<(usize, f64)>; N],
    /// shifts[axis][o][node] = node shifted by o along axis.
    shifts: [Vec<Vec<u32>>; N],
}

impl PartialEq for TorusGrid {
    fn eq(&self, o: &Self) -> bool {
        self.n == o.n && self.len == o.len && self.stencil == o.stencil
    }
}

fn circulant(stencil: Stencil, n: usize, len: f64) -> Vec<(usize, f64)> {
    if n == 1 {
        return Vec::new();
    }
    let h = len / n as f64;
    let raw: Vec<(isize, f64)> = match stencil {
        Stencil::Central2 => vec![(1, 0.5 / h), (-1, -0.5 / h)],
        Stencil::Central4 => vec![
            (1, 8.0 / (12.0 * h)),
            (-1, -8.0 / (12.0 * h)),
            (2, -1.0 / (12.0 * h)),
            (-2, 1.0 / (12.0 * h)),
        ],
        Stencil::Spectral => {
            // w_o = (1/n) Σ_m k_m sin(k_m o h), Nyquist mode dropped
            let half = (n - 1) / 2;
            (1..n as isize)
                .map(|o| {
                    let w: f64 = (1..=half)
                        .map(|m| {
                            let k = TAU * m as f64 / len;
                            2.0 * k * (k * o as f64 * h).sin()
                        })
                        .sum::<f64>()
                        / n as f64;
                    (o, w)
                })
                .collect()
        }
    };
    let mut merged = vec![0.0; n];
    for (o, w) in raw {
        merged[o.rem_euclid(n as isize) as usize] += w;
    }
    merged
        .into_iter()
        .enumerate()
        .filter(|(_, w)| *w != 0.0)
        .collect()
}

impl TorusGrid {
    /// Grid with central differences of order 2 or 4.
    pub fn new(n: [usize; N], len: [f64; N], fd_order: usize) -> Result<Self> {
        let stencil = match fd_order {
            2 => Stencil::Central2,
            4 => Stencil::Central4,
            o => return Err(invalid(format!("fd order must be 2 or 4, got {o}"))),
        };
        Self::with_stencil(n, len, stencil)
    }

    pub fn with_stencil(n: [usize; N], len: [f64; N], stencil: Stencil) -> Result<Self> {
        if n.contains(&0) {
            return Err(invalid("every axis needs at least one node"));
        }
        if len.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(invalid("periods must be positive"));
        }
        let mut strides = [1usize; N];
        for k in (0..N - 1).rev() {
            strides[k] = strides[k + 1] * n[k + 1];
        }
        let total: usize = n.iter().product();
        let weights = std::array::from_fn(|k| circulant(stencil, n[k], len[k]));
        let shifts = std::array::from_fn(|k| {
            if n[k] == 1 {
                return Vec::new();
            }
            (0..n[k])
                .map(|o| {
                    (0..total)
                        .map(|node| {
                            let c = (node / strides[k]) % n[k];
                            let c2 = (c + o) % n[k];
                            (node + c2 * strides[k] - c * strides[k]) as u32
                        })
                        .collect()
                })
                .collect()
        });
        Ok(Self {
            n,
            len,
            stencil,
            strides,
            weights,
            shifts,
        })
    }

    /// Same nodes and periods with a different stencil.
    pub fn restencil(&self, stencil: Stencil) -> Self {
        Self::with_stencil(self.n, self.len, stencil).expect("validated grid")
    }

    /// Same periods with the node counts of active axes multiplied.
    pub fn refine(&self, factor: usize) -> Self {
        let n = std::array::from_fn(|k| if self.n[k] == 1 { 1 } else { self.n[k] * factor });
        Self::with_stencil(n, self.len, self.stencil).expect("validated grid")
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::with_stencil(self.n, self.len.map(|l| l * c), self.stencil).expect("validated grid")
    }

    #[inline]
    pub fn n(&self) -> [usize; N] {
        self.n
    }
    #[inline]
    pub fn len(&self) -> [f64; N] {
        self.len
    }
    #[inline]
    pub fn stencil(&self) -> Stencil {
        self.stencil
    }
    pub fn fd_order(&self) -> Option<usize> {
        match self.stencil {
            Stencil::Central2 => Some(2),
            Stencil::Central4 => Some(4),
            Stencil::Spectral => None,
        }
    }
    #[inline]
    pub fn spacing(&self) -> [f64; N] {
        std::array::from_fn(|k| self.len[k] / self.n[k] as f64)
    }
    pub fn min_spacing(&self) -> f64 {
        (0..N)
            .filter(|&k| self.n[k] > 1)
            .map(|k| self.len[k] / self.n[k] as f64)
            .fold(f64::INFINITY, f64::min)
    }
    /// Cell volume Π h_i.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().iter().product()
    }
    pub fn total_volume(&self) -> f64 {
        self.len.iter().product()
    }
    #[inline]
    pub fn node_count(&self) -> usize {
        self.n.iter().product()
    }
    pub fn active_axes(&self) -> Vec<usize> {
        (0..N).filter(|&k| self.n[k] > 1).collect()
    }
    #[inline]
    pub fn strides(&self) -> [usize; N] {
        self.strides
    }
    pub fn coords(&self, node: usize) -> [usize; N] {
        std::array::from_fn(|k| (node / self.strides[k]) % self.n[k])
    }
    pub fn position(&self, node: usize) -> [f64; N] {
        let c = self.coords(node);
        let h = self.spacing();
        std::array::from_fn(|k| c[k] as f64 * h[k])
    }
    #[inline]
    pub(crate) fn weights(&self, axis: usize) -> &[(usize, f64)] {
        &self.weights[axis]
    }
    #[inline]
    pub(crate) fn shift_table(&self, axis: usize, offset: usize) -> &[u32] {
        &self.shifts[axis][offset]
    }

    /// Discrete wavenumber K with ∂ e^{i k x} = i K e^{i k x} for the mode
    /// index m along `axis`.
    pub fn multiplier(&self, axis: usize, m: i64) -> f64 {
        let n = self.n[axis];
        self.weights[axis]
            .iter()
            .map(|&(o, w)| w * (TAU * m as f64 * o as f64 / n as f64).sin())
            .sum()
    }

    /// Spectral radius bound ρ of h·K over all modes along an axis.
    pub fn stencil_radius(&self) -> f64 {
        match self.stencil {
            Stencil::Central2 => 1.0,
            // max over θ of (8 sin θ − sin 2θ)/6
            Stencil::Central4 => 1.3722,
            Stencil::Spectral => std::f64::consts::PI,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unsupported_order() {
        assert!(TorusGrid::new([8, 1, 1, 1, 1, 1, 1], [1.0; N], 3).is_err());
        assert!(TorusGrid::new([8, 1, 1, 1, 1, 1, 1], [1.0; N], 4).is_ok());
    }

    #[test]
    fn row_major_axis_one_slowest() {
        let g = TorusGrid::new([3, 4, 1, 1, 1, 1, 2], [1.0; N], 2).unwrap();
        assert_eq!(g.node_count(), 24);
        assert_eq!(g.coords(1), [0, 0, 0, 0, 0, 0, 1]);
        assert_eq!(g.coords(8), [1, 0, 0, 0, 0, 0, 0]);
        assert_eq!(g.shift_table(0, 1)[0], 8);
        assert_eq!(g.shift_table(0, 2)[8], 0);
    }

    #[test]
    fn spectral_multiplier_is_exact_below_nyquist() {
        let g = TorusGrid::with_stencil([9, 1, 1, 1, 1, 1, 1], [2.0; N], Stencil::Spectral).unwrap();
        for m in 1..=4 {
            assert!((g.multiplier(0, m) - TAU * m as f64 / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fourth_order_radius_bounds_multiplier() {
        let g = TorusGrid::new([64, 1, 1, 1, 1, 1, 1], [1.0; N], 4).unwrap();
        let h = g.spacing()[0];
        let max = (0..64).map(|m| (g.multiplier(0, m) * h).abs()).fold(0.0, f64::max);
        assert!(max <= g.stencil_radius() && max > 1.37);
    }
}
