//! Truncated Fourier mode sets and complex mode states.
//!
//! A field on the circle is stored through its modes `q^i_n`, `p^i_n` for
//! `|n| <= n_max`. Both signs of `n` are kept, and the reality pairing
//! `q^i_{-n} = conj(q^i_n)` is enforced by every constructor, so the
//! `delta_{n+m,0}` bookkeeping of the brackets is the same as on the full tower.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Signed Fourier mode number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModeIndex(pub i64);

impl ModeIndex {
    pub fn value(self) -> i64 {
        self.0
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(self) -> Self {
        ModeIndex(-self.0)
    }

    /// `n^2` as a float, the only way mode numbers enter the spectrum.
    pub fn squared(self) -> f64 {
        (self.0 * self.0) as f64
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The symmetric mode window `-n_max..=n_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeSet {
    n_max: u32,
}

impl ModeSet {
    pub fn new(n_max: u32) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::IndexMismatch("n_max must be at least 1".into()));
        }
        Ok(Self { n_max })
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    /// Number of retained modes, `2 n_max + 1`.
    pub fn len(&self) -> usize {
        2 * self.n_max as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, n: ModeIndex) -> bool {
        n.0.unsigned_abs() <= u64::from(self.n_max)
    }

    /// All retained modes in ascending order.
    pub fn modes(&self) -> impl Iterator<Item = ModeIndex> + Clone {
        let m = i64::from(self.n_max);
        (-m..=m).map(ModeIndex)
    }

    /// Modes `0..=n_max`; each `n > 0` stands for the pair `(n, -n)`.
    pub fn nonnegative(&self) -> impl Iterator<Item = ModeIndex> + Clone {
        (0..=i64::from(self.n_max)).map(ModeIndex)
    }

    pub(crate) fn slot(&self, n: ModeIndex) -> usize {
        (n.0 + i64::from(self.n_max)) as usize
    }
}

/// Which half of phase space a coordinate lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Kind {
    /// Field mode `q`.
    Q,
    /// Momentum mode `p`.
    P,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::Q => write!(f, "q"),
            Kind::P => write!(f, "p"),
        }
    }
}

/// A phase-space coordinate label `(kind, component, mode)`. Components are
/// zero-based; output formats print them one-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Coordinate {
    pub kind: Kind,
    pub component: usize,
    pub mode: ModeIndex,
}

impl Coordinate {
    pub fn q(component: usize, n: i64) -> Self {
        Self {
            kind: Kind::Q,
            component,
            mode: ModeIndex(n),
        }
    }

    pub fn p(component: usize, n: i64) -> Self {
        Self {
            kind: Kind::P,
            component,
            mode: ModeIndex(n),
        }
    }
}

impl fmt::Display for Coordinate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}[{}]", self.kind, self.component + 1, self.mode)
    }
}

/// Default tolerance for the reality pairing.
pub const REALITY_TOLERANCE: f64 = 1e-12;

/// Complex mode amplitudes of an `components`-component field at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeState {
    modes: ModeSet,
    components: usize,
    q: Vec<Complex64>,
    p: Vec<Complex64>,
    pub time: f64,
}

impl ModeState {
    pub fn zeros(components: usize, modes: ModeSet) -> Self {
        let len = components * modes.len();
        Self {
            modes,
            components,
            q: vec![Complex64::new(0.0, 0.0); len],
            p: vec![Complex64::new(0.0, 0.0); len],
            time: 0.0,
        }
    }

    /// Builds a state from raw amplitudes, checking the reality pairing.
    pub fn from_amplitudes(
        components: usize,
        modes: ModeSet,
        q: Vec<Complex64>,
        p: Vec<Complex64>,
        time: f64,
    ) -> Result<Self> {
        let len = components * modes.len();
        if q.len() != len || p.len() != len {
            return Err(Error::ShapeMismatch(format!(
                "expected {len} amplitudes per kind, got {} and {}",
                q.len(),
                p.len()
            )));
        }
        let state = Self {
            modes,
            components,
            q,
            p,
            time,
        };
        state.check_reality(REALITY_TOLERANCE)?;
        Ok(state)
    }

    pub fn modes(&self) -> ModeSet {
        self.modes
    }

    pub fn components(&self) -> usize {
        self.components
    }

    fn index(&self, component: usize, n: ModeIndex) -> Result<usize> {
        if component >= self.components || !self.modes.contains(n) {
            return Err(Error::IndexMismatch(format!(
                "component {component}, mode {n} outside {} components, n_max {}",
                self.components,
                self.modes.n_max()
            )));
        }
        Ok(component * self.modes.len() + self.modes.slot(n))
    }

    fn raw(&self, component: usize, n: ModeIndex) -> usize {
        component * self.modes.len() + self.modes.slot(n)
    }

    pub fn get(&self, coord: Coordinate) -> Result<Complex64> {
        let idx = self.index(coord.component, coord.mode)?;
        Ok(match coord.kind {
            Kind::Q => self.q[idx],
            Kind::P => self.p[idx],
        })
    }

    /// `q^i_n`; panics outside the stored range.
    pub fn q(&self, component: usize, n: ModeIndex) -> Complex64 {
        self.q[self.index(component, n).expect("mode out of range")]
    }

    /// `p^i_n`; panics outside the stored range.
    pub fn p(&self, component: usize, n: ModeIndex) -> Complex64 {
        self.p[self.index(component, n).expect("mode out of range")]
    }

    /// Sets `coord` and its reality partner at `-n`. For `n = 0` the value
    /// must be real.
    pub fn set_pair(&mut self, coord: Coordinate, value: Complex64) -> Result<()> {
        let idx = self.index(coord.component, coord.mode)?;
        let partner = self.raw(coord.component, coord.mode.neg());
        if coord.mode.0 == 0 && value.im.abs() > REALITY_TOLERANCE {
            return Err(Error::RealityViolation {
                coordinate: coord.to_string(),
                deviation: value.im.abs(),
            });
        }
        let store = match coord.kind {
            Kind::Q => &mut self.q,
            Kind::P => &mut self.p,
        };
        if coord.mode.0 == 0 {
            store[idx] = Complex64::new(value.re, 0.0);
        } else {
            store[idx] = value;
            store[partner] = value.conj();
        }
        Ok(())
    }

    /// Writes a single slot without touching its partner. Callers are
    /// responsible for keeping the pairing.
    pub(crate) fn set_raw(&mut self, kind: Kind, component: usize, n: ModeIndex, value: Complex64) {
        let idx = self.raw(component, n);
        match kind {
            Kind::Q => self.q[idx] = value,
            Kind::P => self.p[idx] = value,
        }
    }

    /// The 4-vector `(q^1_n, q^2_n, p^1_n, p^2_n)` generalized to any number
    /// of components: all `q` first, then all `p`.
    pub fn mode_vector(&self, n: ModeIndex) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(2 * self.components);
        for i in 0..self.components {
            out.push(self.q(i, n));
        }
        for i in 0..self.components {
            out.push(self.p(i, n));
        }
        out
    }

    pub(crate) fn set_mode_vector(&mut self, n: ModeIndex, v: &[Complex64]) {
        let c = self.components;
        for i in 0..c {
            self.set_raw(Kind::Q, i, n, v[i]);
            self.set_raw(Kind::P, i, n, v[c + i]);
        }
    }

    /// Every coordinate label in canonical order (kind, component, mode).
    pub fn coordinates(&self) -> impl Iterator<Item = Coordinate> + '_ {
        [Kind::Q, Kind::P].into_iter().flat_map(move |kind| {
            (0..self.components).flat_map(move |component| {
                self.modes.modes().map(move |mode| Coordinate {
                    kind,
                    component,
                    mode,
                })
            })
        })
    }

    /// Largest `|z_{-n} - conj(z_n)|` over all stored coordinates.
    pub fn reality_defect(&self) -> (f64, Option<Coordinate>) {
        let mut worst = (0.0, None);
        for coord in self.coordinates() {
            let z = self.get(coord).unwrap();
            let partner = self
                .get(Coordinate {
                    mode: coord.mode.neg(),
                    ..coord
                })
                .unwrap();
            let dev = (partner - z.conj()).norm();
            if dev > worst.0 {
                worst = (dev, Some(coord));
            }
        }
        worst
    }

    pub fn check_reality(&self, tolerance: f64) -> Result<()> {
        match self.reality_defect() {
            (dev, Some(coord)) if dev > tolerance => Err(Error::RealityViolation {
                coordinate: coord.to_string(),
                deviation: dev,
            }),
            _ => Ok(()),
        }
    }

    /// Max-norm distance between two states on the same mode set.
    pub fn distance(&self, other: &ModeState) -> f64 {
        self.q
            .iter()
            .zip(&other.q)
            .chain(self.p.iter().zip(&other.p))
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.q.iter().chain(&self.p).map(|z| z.norm()).fold(0.0, f64::max)
    }
}
