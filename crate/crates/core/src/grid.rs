//! Grid geometry and mode bookkeeping for the periodic box
//! `(0,1) x (0,1) x (-1,1)`.
//!
//! Modes are indexed by signed integer triples `k = (k1, k2, k3)` and carry
//! the physical wavevector `kappa(k) = (2 pi k1, 2 pi k2, pi k3)`; the third
//! entry reflects the doubled vertical period. All symbols, norms and
//! derivatives are expressed through `kappa`, never through raw indices.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Signed index of a single Fourier mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct WaveIndex {
    pub k1: i64,
    pub k2: i64,
    pub k3: i64,
}

impl WaveIndex {
    pub fn new(k1: i64, k2: i64, k3: i64) -> Self {
        Self { k1, k2, k3 }
    }

    /// Physical wavevector `(2 pi k1, 2 pi k2, pi k3)`.
    pub fn kappa(&self) -> [f64; 3] {
        [
            2.0 * PI * self.k1 as f64,
            2.0 * PI * self.k2 as f64,
            PI * self.k3 as f64,
        ]
    }

    /// `|kappa|^2`.
    pub fn kappa_sq(&self) -> f64 {
        let [a, b, c] = self.kappa();
        a * a + b * b + c * c
    }

    /// `|kappa_H|^2`, the squared horizontal wavevector.
    pub fn kappa_h_sq(&self) -> f64 {
        let [a, b, _] = self.kappa();
        a * a + b * b
    }

    /// Vertical wavenumber `pi k3`.
    pub fn kappa3(&self) -> f64 {
        PI * self.k3 as f64
    }

    pub fn is_zero(&self) -> bool {
        self.k1 == 0 && self.k2 == 0 && self.k3 == 0
    }

    /// Canonical representative of the conjugate pair `{k, -k}`: the member
    /// whose last nonzero entry (checked in the order k3, k2, k1) is positive.
    pub fn is_conjugate_canonical(&self) -> bool {
        if self.k3 != 0 {
            self.k3 > 0
        } else if self.k2 != 0 {
            self.k2 > 0
        } else {
            self.k1 > 0
        }
    }
}

impl std::ops::Neg for WaveIndex {
    type Output = WaveIndex;
    fn neg(self) -> WaveIndex {
        WaveIndex::new(-self.k1, -self.k2, -self.k3)
    }
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    n1: usize,
    n2: usize,
    n3: usize,
    dealias_num: u32,
    dealias_den: u32,
}

/// Uniform collocation grid with an attached dealiasing rule.
///
/// The dealiasing fraction is kept as an exact rational `num/den` in `(0, 1]`
/// so retained-mode decisions are integer comparisons. The plane `k_i = -n_i/2`
/// is never retained: it has no conjugate partner on the grid and would make
/// the index-to-wavevector map non-injective.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct Grid {
    n1: usize,
    n2: usize,
    n3: usize,
    dealias_num: u32,
    dealias_den: u32,
}

impl TryFrom<GridRepr> for Grid {
    type Error = Error;
    fn try_from(r: GridRepr) -> Result<Grid> {
        Grid::with_dealias(r.n1, r.n2, r.n3, r.dealias_num, r.dealias_den)
    }
}

impl From<Grid> for GridRepr {
    fn from(g: Grid) -> GridRepr {
        GridRepr {
            n1: g.n1,
            n2: g.n2,
            n3: g.n3,
            dealias_num: g.dealias_num,
            dealias_den: g.dealias_den,
        }
    }
}

impl Grid {
    /// Grid with the standard two-thirds dealiasing rule.
    pub fn new(n1: usize, n2: usize, n3: usize) -> Result<Self> {
        Self::with_dealias(n1, n2, n3, 2, 3)
    }

    /// Grid with dealiasing fraction `num/den`; modes with
    /// `|k_i| > (num/den) * n_i / 2` in any axis are dropped.
    pub fn with_dealias(n1: usize, n2: usize, n3: usize, num: u32, den: u32) -> Result<Self> {
        for (name, n) in [("n1", n1), ("n2", n2), ("n3", n3)] {
            if n < 4 || n % 2 != 0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {n}: grid sizes must be even and at least 4"
                )));
            }
        }
        if den == 0 || num == 0 || num > den {
            return Err(Error::InvalidParameter(format!(
                "dealias fraction {num}/{den} must lie in (0, 1]"
            )));
        }
        Ok(Self {
            n1,
            n2,
            n3,
            dealias_num: num,
            dealias_den: den,
        })
    }

    pub fn n(&self) -> [usize; 3] {
        [self.n1, self.n2, self.n3]
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2 * self.n3
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dealias_fraction(&self) -> (u32, u32) {
        (self.dealias_num, self.dealias_den)
    }

    /// Signed mode index for storage position `i` along an axis of length `n`
    /// (the usual FFT frequency layout).
    pub fn signed_index(i: usize, n: usize) -> i64 {
        if i < n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    /// Storage position for signed index `k` along an axis of length `n`.
    pub fn storage_offset(k: i64, n: usize) -> Option<usize> {
        let half = (n / 2) as i64;
        if k >= 0 && k < half {
            Some(k as usize)
        } else if k >= -half && k < 0 {
            Some((k + n as i64) as usize)
        } else {
            None
        }
    }

    pub fn wave_index(&self, i1: usize, i2: usize, i3: usize) -> WaveIndex {
        WaveIndex::new(
            Self::signed_index(i1, self.n1),
            Self::signed_index(i2, self.n2),
            Self::signed_index(i3, self.n3),
        )
    }

    /// Storage position of mode `k`, or `None` when `k` is outside the box.
    pub fn storage_index(&self, k: WaveIndex) -> Option<(usize, usize, usize)> {
        Some((
            Self::storage_offset(k.k1, self.n1)?,
            Self::storage_offset(k.k2, self.n2)?,
            Self::storage_offset(k.k3, self.n3)?,
        ))
    }

    /// Storage position of `-k` given the storage position of `k`.
    pub fn conjugate_index(&self, i1: usize, i2: usize, i3: usize) -> (usize, usize, usize) {
        (
            (self.n1 - i1) % self.n1,
            (self.n2 - i2) % self.n2,
            (self.n3 - i3) % self.n3,
        )
    }

    /// Whether mode `k` survives dealiasing (and is conjugate-pair safe).
    pub fn is_retained(&self, k: &WaveIndex) -> bool {
        let ok = |k: i64, n: usize| -> bool {
            k != -((n / 2) as i64)
                && 2 * k.unsigned_abs() * self.dealias_den as u64
                    <= n as u64 * self.dealias_num as u64
        };
        ok(k.k1, self.n1) && ok(k.k2, self.n2) && ok(k.k3, self.n3)
    }

    /// Signed indices along one axis (0, 1 or 2) in storage order.
    pub fn signed_axis(&self, axis: usize) -> Vec<i64> {
        let n = self.n()[axis];
        (0..n).map(|i| Self::signed_index(i, n)).collect()
    }

    /// Iterate all storage positions with their signed indices.
    pub fn indexed_modes(&self) -> impl Iterator<Item = ((usize, usize, usize), WaveIndex)> + '_ {
        let (n1, n2, n3) = (self.n1, self.n2, self.n3);
        (0..n1).flat_map(move |i1| {
            (0..n2).flat_map(move |i2| {
                (0..n3).map(move |i3| ((i1, i2, i3), self.wave_index(i1, i2, i3)))
            })
        })
    }

    /// Collocation point for storage position `(j1, j2, j3)`:
    /// `x = j1/n1`, `y = j2/n2`, `z = -1 + 2 j3/n3`.
    pub fn point(&self, j1: usize, j2: usize, j3: usize) -> [f64; 3] {
        [
            j1 as f64 / self.n1 as f64,
            j2 as f64 / self.n2 as f64,
            -1.0 + 2.0 * j3 as f64 / self.n3 as f64,
        ]
    }
}
