//! The infinite Chacon transformation built by cutting and stacking exact
//! rational intervals.
//!
//! Tower `n` has `h_n` levels of width `3^(1-n)`. Going from tower `n` to
//! tower `n + 1`, every level is cut into thirds, one spacer goes on top of
//! the middle column and `3 h_n + 1` spacers go on top of the right column,
//! then the three columns are stacked left, middle, right. Spacers are taken
//! contiguously from the right edge of the mass allocated so far, so tower
//! `n` always covers exactly `[0, h_n 3^(1-n))` and each of its levels is one
//! cell `[j w, (j + 1) w)` of that segment.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{StepError, Transformation};
use crate::rational::{Interval, Rational};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ChaconError {
    #[error("tower depth must be at least 1, got {0}")]
    InvalidDepth(u32),
    #[error("tower order {order} not constructed (depth {n_max})")]
    NoSuchTower { order: u32, n_max: u32 },
}

/// Where a level of the deepest tower came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LevelOrigin {
    /// A piece of the unit interval that forms the first tower.
    Base,
    /// The spacer put on the middle column while building tower `stage + 1`.
    MiddleSpacer { stage: u32 },
    /// Spacer number `index` (0-based, bottom-up) on the right column while
    /// building tower `stage + 1`.
    RightSpacer { stage: u32, index: usize },
}

/// Height of tower `n` from `h_1 = 1`, `h_{n+1} = 2(3 h_n + 1)`.
pub fn tower_height(n: u32) -> u64 {
    assert!(n >= 1);
    (1..n).fold(1u64, |h, _| 2 * (3 * h + 1))
}

#[derive(Debug, Clone)]
pub struct Tower {
    order: u32,
    level_width: Rational,
    levels: Vec<Interval>,
    // level index (0-based) of the cell [j w, (j+1) w)
    level_of_cell: Vec<u32>,
}

impl Tower {
    fn new(order: u32, level_width: Rational, levels: Vec<Interval>) -> Self {
        let mut level_of_cell = vec![u32::MAX; levels.len()];
        for (k, level) in levels.iter().enumerate() {
            let cell = level.lo().floor_div(level_width) as usize;
            debug_assert_eq!(level.width(), level_width);
            debug_assert_eq!(level_of_cell[cell], u32::MAX);
            level_of_cell[cell] = k as u32;
        }
        debug_assert!(level_of_cell.iter().all(|&k| k != u32::MAX));
        Tower {
            order,
            level_width,
            levels,
            level_of_cell,
        }
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn height(&self) -> usize {
        self.levels.len()
    }

    pub fn level_width(&self) -> Rational {
        self.level_width
    }

    /// Levels bottom to top; `levels()[k - 1]` is the level of 1-based index `k`.
    pub fn levels(&self) -> &[Interval] {
        &self.levels
    }

    /// Right edge of the covered segment `[0, h w)`.
    pub fn mass(&self) -> Rational {
        self.level_width * self.height() as i128
    }

    /// 1-based level index containing `x`, and the offset from its left end.
    pub fn locate(&self, x: Rational) -> Result<(usize, Rational), StepError> {
        let k = self.level_index(x)?;
        Ok((k + 1, x - self.levels[k].lo()))
    }

    fn level_index(&self, x: Rational) -> Result<usize, StepError> {
        if x.is_negative() {
            return Err(StepError::OutOfDomain(x));
        }
        let cell = x.floor_div(self.level_width);
        if cell >= self.levels.len() as i128 {
            return Err(StepError::OutOfDomain(x));
        }
        Ok(self.level_of_cell[cell as usize] as usize)
    }

    /// The climbing translation of this tower alone.
    pub fn translate(&self, x: Rational) -> Result<Rational, StepError> {
        let k = self.level_index(x)?;
        if k + 1 == self.levels.len() {
            return Err(StepError::DepthExceeded);
        }
        Ok(x - self.levels[k].lo() + self.levels[k + 1].lo())
    }

    pub fn translate_inv(&self, x: Rational) -> Result<Rational, StepError> {
        let k = self.level_index(x)?;
        if k == 0 {
            return Err(StepError::DepthExceeded);
        }
        Ok(x - self.levels[k].lo() + self.levels[k - 1].lo())
    }
}

/// The Chacon towers of orders `1..=n_max` and the spacers added at each stage.
#[derive(Debug, Clone)]
pub struct ChaconSystem {
    towers: Vec<Tower>,
    spacers: Vec<Vec<Interval>>,
    origins: Vec<LevelOrigin>,
    high_water: Rational,
}

impl ChaconSystem {
    pub fn build(n_max: u32) -> Result<Self, ChaconError> {
        if n_max == 0 {
            return Err(ChaconError::InvalidDepth(n_max));
        }
        let unit = Interval::new(Rational::ZERO, Rational::ONE).unwrap();
        let mut towers = vec![Tower::new(1, Rational::ONE, vec![unit])];
        let mut origins = vec![LevelOrigin::Base];
        let mut spacers = Vec::new();
        let mut high_water = Rational::ONE;

        for stage in 1..n_max {
            let prev = towers.last().unwrap();
            let h = prev.height();
            let width = prev.level_width() * Rational::new(1, 3);
            let thirds: Vec<[Interval; 3]> = prev.levels().iter().map(Interval::thirds).collect();

            let mut alloc = || {
                let spacer = Interval::with_width(high_water, width);
                high_water = spacer.hi();
                spacer
            };

            let mut levels = Vec::with_capacity(2 * (3 * h + 1));
            let mut next_origins = Vec::with_capacity(levels.capacity());
            let mut stage_spacers = Vec::with_capacity(3 * h + 2);
            for column in 0..3 {
                levels.extend(thirds.iter().map(|t| t[column]));
                next_origins.extend_from_slice(&origins);
                match column {
                    1 => {
                        let s = alloc();
                        levels.push(s);
                        stage_spacers.push(s);
                        next_origins.push(LevelOrigin::MiddleSpacer { stage });
                    }
                    2 => {
                        for index in 0..3 * h + 1 {
                            let s = alloc();
                            levels.push(s);
                            stage_spacers.push(s);
                            next_origins.push(LevelOrigin::RightSpacer { stage, index });
                        }
                    }
                    _ => {}
                }
            }
            towers.push(Tower::new(stage + 1, width, levels));
            spacers.push(stage_spacers);
            origins = next_origins;
        }

        Ok(ChaconSystem {
            towers,
            spacers,
            origins,
            high_water,
        })
    }

    pub fn n_max(&self) -> u32 {
        self.towers.len() as u32
    }

    pub fn towers(&self) -> &[Tower] {
        &self.towers
    }

    pub fn tower(&self, order: u32) -> Result<&Tower, ChaconError> {
        order
            .checked_sub(1)
            .and_then(|i| self.towers.get(i as usize))
            .ok_or(ChaconError::NoSuchTower {
                order,
                n_max: self.n_max(),
            })
    }

    pub fn top(&self) -> &Tower {
        self.towers.last().unwrap()
    }

    /// Spacers added while building tower `stage + 1`: the middle spacer
    /// first, then the right column bottom-up.
    pub fn stage_spacers(&self, stage: u32) -> Option<&[Interval]> {
        stage
            .checked_sub(1)
            .and_then(|i| self.spacers.get(i as usize))
            .map(Vec::as_slice)
    }

    pub fn high_water(&self) -> Rational {
        self.high_water
    }

    pub fn covered(&self) -> Interval {
        Interval::new(Rational::ZERO, self.high_water).unwrap()
    }

    /// Origin of the deepest-tower level containing `x`.
    pub fn origin(&self, x: Rational) -> Result<LevelOrigin, StepError> {
        let k = self.top().level_index(x)?;
        Ok(self.origins[k])
    }

    pub fn origins(&self) -> &[LevelOrigin] {
        &self.origins
    }

    /// `T x`, failing on the top level of the deepest tower.
    pub fn apply_t(&self, x: Rational) -> Result<Rational, StepError> {
        self.top().translate(x)
    }

    pub fn apply_t_inv(&self, x: Rational) -> Result<Rational, StepError> {
        self.top().translate_inv(x)
    }

    /// `T x` read off tower `order` only.
    pub fn apply_t_in(&self, order: u32, x: Rational) -> Result<Rational, StepError> {
        match self.tower(order) {
            Ok(t) => t.translate(x),
            Err(_) => Err(StepError::DepthExceeded),
        }
    }

    /// `T x` from the lowest-order tower where `x` is not on the top level.
    pub fn apply_t_smallest(&self, x: Rational) -> Result<Rational, StepError> {
        if x.is_negative() || x >= self.high_water {
            return Err(StepError::OutOfDomain(x));
        }
        for tower in &self.towers {
            match tower.translate(x) {
                Ok(y) => return Ok(y),
                Err(_) => continue,
            }
        }
        Err(StepError::DepthExceeded)
    }

    pub fn locate(&self, x: Rational, order: u32) -> Result<(usize, Rational), StepError> {
        match self.tower(order) {
            Ok(t) => t.locate(x),
            Err(_) => Err(StepError::OutOfDomain(x)),
        }
    }

    /// `[x, T x, ..., T^p x]`, or the inverse orbit for negative `p`.
    pub fn orbit(&self, x: Rational, p: i64) -> Result<Vec<Rational>, OrbitError> {
        let mut out = Vec::with_capacity(p.unsigned_abs() as usize + 1);
        out.push(x);
        let mut cur = x;
        for index in 1..=p.unsigned_abs() {
            let next = if p >= 0 {
                self.apply_t(cur)
            } else {
                self.apply_t_inv(cur)
            };
            cur = next.map_err(|cause| OrbitError { index, cause })?;
            out.push(cur);
        }
        Ok(out)
    }

    /// First `1 <= k <= p_max` with `T^k x` in one of `targets`.
    pub fn return_time(
        &self,
        x: Rational,
        targets: &[Interval],
        p_max: u64,
    ) -> Result<u64, ReturnCensor> {
        let mut cur = x;
        for k in 1..=p_max {
            cur = self
                .apply_t(cur)
                .map_err(|cause| ReturnCensor::Step { index: k, cause })?;
            if targets.iter().any(|a| a.contains(cur)) {
                return Ok(k);
            }
        }
        Err(ReturnCensor::Horizon(p_max))
    }

    /// Maximal translation pieces of `T` on the deepest tower: each domain
    /// is mapped to an interval of the same width by adding the shift.
    pub fn translation_pieces(&self) -> Vec<(Interval, Rational)> {
        let top = self.top();
        let levels = top.levels();
        let mut pieces: Vec<(Interval, Rational)> = levels
            .windows(2)
            .map(|w| (w[0], w[1].lo() - w[0].lo()))
            .collect();
        pieces.sort_by(|a, b| a.0.cmp_lo(&b.0));
        let mut merged: Vec<(Interval, Rational)> = Vec::new();
        for (dom, shift) in pieces {
            match merged.last_mut() {
                Some((last, s)) if *s == shift && last.hi() == dom.lo() => {
                    *last = Interval::new(last.lo(), dom.hi()).unwrap();
                }
                _ => merged.push((dom, shift)),
            }
        }
        merged
    }
}

impl Transformation for ChaconSystem {
    fn forward(&self, x: Rational) -> Result<Rational, StepError> {
        self.apply_t(x)
    }
    fn backward(&self, x: Rational) -> Result<Rational, StepError> {
        self.apply_t_inv(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("orbit stopped at step {index}: {cause}")]
pub struct OrbitError {
    pub index: u64,
    pub cause: StepError,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ReturnCensor {
    #[error("no return within {0} steps")]
    Horizon(u64),
    #[error("orbit stopped at step {index}: {cause}")]
    Step { index: u64, cause: StepError },
}

#[derive(Serialize, Deserialize, Debug, PartialEq)]
pub struct TowerExport {
    pub order: u32,
    pub height: usize,
    pub level_width: Rational,
    pub levels: Vec<Interval>,
}

#[derive(Serialize, Deserialize, Debug, PartialEq)]
pub struct SystemExport {
    pub n_max: u32,
    pub towers: Vec<TowerExport>,
    pub high_water: Rational,
}

impl From<&ChaconSystem> for SystemExport {
    fn from(system: &ChaconSystem) -> Self {
        SystemExport {
            n_max: system.n_max(),
            towers: system
                .towers()
                .iter()
                .map(|t| TowerExport {
                    order: t.order(),
                    height: t.height(),
                    level_width: t.level_width(),
                    levels: t.levels().to_vec(),
                })
                .collect(),
            high_water: system.high_water(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::tiles_exactly;

    fn r(p: i128, q: i128) -> Rational {
        Rational::new(p, q)
    }

    #[test]
    fn depth_one_is_the_unit_interval() {
        let s = ChaconSystem::build(1).unwrap();
        assert_eq!(s.top().height(), 1);
        assert_eq!(s.top().levels()[0], Interval::new(r(0, 1), r(1, 1)).unwrap());
        assert_eq!(s.apply_t(r(1, 2)), Err(StepError::DepthExceeded));
    }

    #[test]
    fn depth_zero_rejected() {
        assert_eq!(
            ChaconSystem::build(0).unwrap_err(),
            ChaconError::InvalidDepth(0)
        );
    }

    #[test]
    fn second_tower_mass_and_stacking() {
        let s = ChaconSystem::build(2).unwrap();
        let t = s.top();
        assert_eq!(t.height(), 8);
        assert_eq!(t.level_width(), r(1, 3));
        assert_eq!(s.high_water(), r(8, 3));
        let los: Vec<Rational> = t.levels().iter().map(|l| l.lo()).collect();
        // left, middle, middle spacer, right, four right spacers
        let expected = [r(0, 1), r(1, 3), r(1, 1), r(2, 3), r(4, 3), r(5, 3), r(2, 1), r(7, 3)];
        assert_eq!(los, expected);
        assert_eq!(s.stage_spacers(1).unwrap().len(), 5);
    }

    #[test]
    fn heights_follow_recurrence() {
        let s = ChaconSystem::build(4).unwrap();
        let hs: Vec<usize> = s.towers().iter().map(Tower::height).collect();
        assert_eq!(hs, vec![1, 8, 50, 302]);
        for n in 1..=4 {
            assert_eq!(tower_height(n), hs[n as usize - 1] as u64);
        }
    }

    #[test]
    fn levels_partition_covered_segment() {
        let s = ChaconSystem::build(5).unwrap();
        for t in s.towers() {
            assert!(tiles_exactly(t.levels(), Rational::ZERO, t.mass()));
        }
        assert_eq!(s.high_water(), s.top().mass());
    }

    #[test]
    fn towers_refine_by_adding_spacers() {
        let s = ChaconSystem::build(4).unwrap();
        for n in 1..4u32 {
            let lower = s.tower(n).unwrap();
            let upper = s.tower(n + 1).unwrap();
            let mut pieces: Vec<Interval> = lower.levels().to_vec();
            pieces.extend_from_slice(s.stage_spacers(n).unwrap());
            assert!(tiles_exactly(&pieces, Rational::ZERO, upper.mass()));
        }
    }

    #[test]
    fn first_steps_from_zero() {
        let s = ChaconSystem::build(2).unwrap();
        assert_eq!(s.apply_t(r(0, 1)), Ok(r(1, 3)));
        assert_eq!(s.apply_t_inv(r(1, 3)), Ok(r(0, 1)));
        // the middle third climbs onto its spacer, allocated at the old high-water mark
        assert_eq!(s.orbit(r(0, 1), 2).unwrap(), vec![r(0, 1), r(1, 3), r(1, 1)]);
    }

    #[test]
    fn domain_errors() {
        let s = ChaconSystem::build(2).unwrap();
        assert_eq!(s.apply_t(r(8, 3)), Err(StepError::OutOfDomain(r(8, 3))));
        assert_eq!(s.apply_t_inv(r(-1, 5)), Err(StepError::OutOfDomain(r(-1, 5))));
        // bottom level of the deepest tower
        assert_eq!(s.apply_t_inv(r(1, 9)), Err(StepError::DepthExceeded));
        // top level: the last right spacer
        assert_eq!(s.apply_t(r(5, 2)), Err(StepError::DepthExceeded));
    }

    #[test]
    fn orbit_reports_index_of_failure() {
        let s = ChaconSystem::build(2).unwrap();
        assert_eq!(s.orbit(r(0, 1), 0).unwrap(), vec![r(0, 1)]);
        let err = s.orbit(r(0, 1), 10).unwrap_err();
        assert_eq!(err, OrbitError { index: 8, cause: StepError::DepthExceeded });
        let back = s.orbit(r(1, 1), -2).unwrap();
        assert_eq!(back, vec![r(1, 1), r(1, 3), r(0, 1)]);
    }

    #[test]
    fn locate_examples() {
        let s = ChaconSystem::build(2).unwrap();
        assert_eq!(s.locate(r(0, 1), 1), Ok((1, r(0, 1))));
        assert_eq!(s.locate(r(1, 2), 2), Ok((2, r(1, 6))));
        assert_eq!(s.locate(r(3, 2), 1), Err(StepError::OutOfDomain(r(3, 2))));
    }

    #[test]
    fn top_of_lower_tower_matches_next_tower() {
        let s = ChaconSystem::build(3).unwrap();
        let top2 = s.tower(2).unwrap().levels()[7];
        let x = top2.lo() + r(1, 27);
        assert_eq!(s.apply_t_in(2, x), Err(StepError::DepthExceeded));
        assert_eq!(s.apply_t(x), s.apply_t_in(3, x));
        assert_eq!(s.apply_t(x), s.apply_t_smallest(x));
    }

    #[test]
    fn return_time_cases() {
        let s = ChaconSystem::build(3).unwrap();
        let all = [s.covered()];
        assert_eq!(s.return_time(r(1, 7), &all, 5), Ok(1));
        let a = [Interval::new(r(0, 1), r(2, 3)).unwrap()];
        assert_eq!(s.return_time(r(0, 1), &a, 5), Ok(1));
        let none = [Interval::new(r(100, 1), r(101, 1)).unwrap()];
        assert_eq!(s.return_time(r(0, 1), &none, 3), Err(ReturnCensor::Horizon(3)));
        let brute = |x: Rational, a: &[Interval]| {
            let orb = s.orbit(x, 49).unwrap_or_default();
            orb.iter().skip(1).position(|y| a.iter().any(|i| i.contains(*y))).map(|i| i as u64 + 1)
        };
        for j in 0..9 {
            let x = r(j, 27) + r(1, 100);
            if let Some(expected) = brute(x, &a) {
                assert_eq!(s.return_time(x, &a, 60), Ok(expected));
            }
        }
    }

    #[test]
    fn pieces_preserve_width_and_partition() {
        let s = ChaconSystem::build(4).unwrap();
        let pieces = s.translation_pieces();
        let doms: Vec<Interval> = pieces.iter().map(|p| p.0).collect();
        let mut with_top = doms.clone();
        with_top.push(*s.top().levels().last().unwrap());
        assert!(tiles_exactly(&with_top, Rational::ZERO, s.high_water()));
        let images: Vec<Interval> = pieces
            .iter()
            .map(|(d, sh)| Interval::new(d.lo() + *sh, d.hi() + *sh).unwrap())
            .collect();
        let mut with_bottom = images.clone();
        with_bottom.push(s.top().levels()[0]);
        assert!(tiles_exactly(&with_bottom, Rational::ZERO, s.high_water()));
    }

    #[test]
    fn export_round_trips_through_json() {
        let s = ChaconSystem::build(3).unwrap();
        let export = SystemExport::from(&s);
        let text = serde_json::to_string(&export).unwrap();
        assert!(text.contains("\"level_width\":\"1/9\""));
        let back: SystemExport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, export);
    }
}
