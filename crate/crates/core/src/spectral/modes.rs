use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

/// Identifier written into snapshot headers for the ordering produced by
/// [`build_mode_set`].
pub const MODE_ORDERING_ID: &str = "ball-lex-m3nonneg-v1";

/// Integer Fourier mode `m`; the physical wavevector is `k = 2 pi m`.
///
/// Stored modes always have `m3 >= 0`: the cosine basis in `z` absorbs the
/// sign of the vertical index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeIndex {
    pub m1: i32,
    pub m2: i32,
    pub m3: i32,
}

impl ModeIndex {
    pub const ZERO: ModeIndex = ModeIndex { m1: 0, m2: 0, m3: 0 };

    pub const fn new(m1: i32, m2: i32, m3: i32) -> Self {
        Self { m1, m2, m3 }
    }

    pub fn norm_sq(&self) -> i64 {
        let (a, b, c) = (self.m1 as i64, self.m2 as i64, self.m3 as i64);
        a * a + b * b + c * c
    }

    /// `|k|` with `k = 2 pi m`.
    pub fn k_abs(&self) -> f64 {
        2.0 * PI * (self.norm_sq() as f64).sqrt()
    }

    /// Horizontal wavenumber `|k'|`.
    pub fn kh_abs(&self) -> f64 {
        let (a, b) = (self.m1 as f64, self.m2 as f64);
        2.0 * PI * (a * a + b * b).sqrt()
    }

    /// Vertical wavenumber `|k3|`.
    pub fn kz_abs(&self) -> f64 {
        2.0 * PI * (self.m3 as f64).abs()
    }

    /// Horizontal wavevector `k' = 2 pi (m1, m2)`.
    pub fn kh(&self) -> [f64; 2] {
        [2.0 * PI * self.m1 as f64, 2.0 * PI * self.m2 as f64]
    }

    /// Mode carrying the conjugate coefficient, `(-m1, -m2, m3)`.
    pub fn partner(&self) -> ModeIndex {
        ModeIndex::new(-self.m1, -self.m2, self.m3)
    }

    /// One representative of each `{m, partner(m)}` pair; modes with
    /// `m' = 0` are their own partner and count as canonical.
    pub fn is_canonical(&self) -> bool {
        self.m1 > 0 || (self.m1 == 0 && self.m2 >= 0)
    }

    pub fn is_horizontal_mean(&self) -> bool {
        self.m1 == 0 && self.m2 == 0
    }
}

/// All `m` with `|m| <= order` and `m3 >= 0`, in lexicographic `(m1, m2, m3)`
/// order.
pub fn build_mode_set(order: usize) -> Vec<ModeIndex> {
    let n = order as i32;
    let r2 = (order * order) as i64;
    let mut out = Vec::new();
    for m1 in -n..=n {
        for m2 in -n..=n {
            for m3 in 0..=n {
                let m = ModeIndex::new(m1, m2, m3);
                if m.norm_sq() <= r2 {
                    out.push(m);
                }
            }
        }
    }
    out
}

/// The retained modes of a truncation order together with O(1) lookup.
#[derive(Debug)]
pub struct ModeSet {
    order: usize,
    modes: Vec<ModeIndex>,
    lookup: Vec<u32>,
    partners: Vec<usize>,
}

const ABSENT: u32 = u32::MAX;

impl ModeSet {
    pub fn new(order: usize) -> Self {
        let modes = build_mode_set(order);
        let side = 2 * order + 1;
        let mut lookup = vec![ABSENT; side * side * (order + 1)];
        for (i, m) in modes.iter().enumerate() {
            lookup[Self::slot(order, *m)] = i as u32;
        }
        let mut set = ModeSet {
            order,
            modes,
            lookup,
            partners: Vec::new(),
        };
        set.partners = set
            .modes
            .iter()
            .map(|m| set.index_of(m.partner()).expect("ball is symmetric"))
            .collect();
        set
    }

    /// Process-wide cached mode set for `order`.
    pub fn shared(order: usize) -> Arc<ModeSet> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<ModeSet>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
        guard
            .entry(order)
            .or_insert_with(|| Arc::new(ModeSet::new(order)))
            .clone()
    }

    fn slot(order: usize, m: ModeIndex) -> usize {
        let side = 2 * order + 1;
        let o = order as i32;
        ((m.m1 + o) as usize * side + (m.m2 + o) as usize) * (order + 1) + m.m3 as usize
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[ModeIndex] {
        &self.modes
    }

    pub fn mode(&self, i: usize) -> ModeIndex {
        self.modes[i]
    }

    /// Index of the stored mode `m`; a negative `m3` is folded to `|m3|`.
    pub fn index_of(&self, m: ModeIndex) -> Option<usize> {
        let m = ModeIndex::new(m.m1, m.m2, m.m3.abs());
        let o = self.order as i32;
        if m.m1.abs() > o || m.m2.abs() > o || m.m3 > o {
            return None;
        }
        match self.lookup[Self::slot(self.order, m)] {
            ABSENT => None,
            i => Some(i as usize),
        }
    }

    pub fn partner_index(&self, i: usize) -> usize {
        self.partners[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force count of stored modes: enumerate the full integer ball and
    /// fold `m3 < 0` onto `m3 > 0`.
    fn folded_count_by_enumeration(n: i32) -> usize {
        let mut seen = std::collections::BTreeSet::new();
        for a in -n..=n {
            for b in -n..=n {
                for c in -n..=n {
                    if a * a + b * b + c * c <= n * n {
                        seen.insert((a, b, c.abs()));
                    }
                }
            }
        }
        seen.len()
    }

    fn ball_count(n: i32, only_m3_zero: bool) -> usize {
        let mut count = 0;
        for a in -n..=n {
            for b in -n..=n {
                for c in -n..=n {
                    if only_m3_zero && c != 0 {
                        continue;
                    }
                    if a * a + b * b + c * c <= n * n {
                        count += 1;
                    }
                }
            }
        }
        count
    }

    #[test]
    fn order_zero_is_only_the_mean() {
        assert_eq!(build_mode_set(0), vec![ModeIndex::ZERO]);
    }

    #[test]
    fn order_one_folds_the_seven_point_ball_to_six() {
        let modes = build_mode_set(1);
        assert_eq!(folded_count_by_enumeration(1), 6);
        assert_eq!(modes.len(), 6);
        for m in [
            ModeIndex::new(0, 0, 0),
            ModeIndex::new(0, 0, 1),
            ModeIndex::new(1, 0, 0),
            ModeIndex::new(-1, 0, 0),
            ModeIndex::new(0, 1, 0),
            ModeIndex::new(0, -1, 0),
        ] {
            assert!(modes.contains(&m), "{m:?}");
        }
    }

    #[test]
    fn stored_count_matches_folding_identity() {
        for n in 0..=8 {
            let full = ball_count(n, false);
            let flat = ball_count(n, true);
            assert_eq!(build_mode_set(n as usize).len(), (full + flat) / 2, "N={n}");
            assert_eq!(build_mode_set(n as usize).len(), folded_count_by_enumeration(n));
        }
        assert_eq!(build_mode_set(2).len(), 23);
    }

    #[test]
    fn order_is_lexicographic_and_deduplicated() {
        let modes = build_mode_set(3);
        assert!(modes.windows(2).all(|w| w[0] < w[1]));
        assert!(modes.iter().all(|m| m.m3 >= 0));
    }

    #[test]
    fn lookup_and_partners_are_consistent() {
        let set = ModeSet::new(4);
        for (i, m) in set.modes().iter().enumerate() {
            assert_eq!(set.index_of(*m), Some(i));
            assert_eq!(set.index_of(ModeIndex::new(m.m1, m.m2, -m.m3)), Some(i));
            let p = set.partner_index(i);
            assert_eq!(set.mode(p), m.partner());
            assert_eq!(set.partner_index(p), i);
            if !m.is_horizontal_mean() {
                assert_ne!(m.is_canonical(), set.mode(p).is_canonical());
            }
        }
        assert_eq!(set.index_of(ModeIndex::new(4, 1, 0)), None);
    }
}
