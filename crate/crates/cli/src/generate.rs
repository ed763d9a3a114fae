//! Seeded random instances of each supported class.
//!
//! The random stream is ChaCha8 seeded with `ChaCha8Rng::seed_from_u64`.
//! An integer in `lo..=hi` is drawn from `next_u64` by rejection: draws at
//! or above the largest multiple of the span are discarded, then the
//! remainder modulo the span is added to `lo`. A fair coin is one such draw
//! in `0..=1`. Draws happen column by column, agents in index order.
//!
//! Each draw first picks its item-kind weights: goods 6, dummy bads
//! `0..=2`, pure bads `0..=4` (goods 3 and bads `0..=4` for separable
//! instances), leaving out the kinds the value range cannot produce. Then
//! per column:
//! * a mixed good draws a common value `v` in `1..=hi` (one `v` for the
//!   whole instance in the binary class); each agent likes it with
//!   probability 1/2, at least one agent forced by drawing an index;
//!   non-likers get a value in `max(lo,-v)..=0` (exactly 0 for pure goods);
//! * a dummy bad draws every entry in `min(lo,0)..=0`, then sets a drawn
//!   agent's entry to 0;
//! * a pure bad draws from `lo..=min(hi,-1)`: one value per column when bads
//!   are identical, one per entry otherwise; for ordered bads each agent's
//!   draws are then sorted ascending and laid out along a common item
//!   order, itself drawn by a Fisher-Yates shuffle;
//! * a separable non-negative column draws entries in `max(lo,0)..=max(hi,0)`.
//!
//! Draws with no mixed good (restricted classes) or with every agent at
//! total value `<= 0` are degenerate and redrawn from the same stream.

use clap::ValueEnum;
use manna_core::{Instance, Rational};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum)]
pub enum ClassKind {
    RestrictedGoods,
    RmgIdentical,
    BinaryMixed,
    Separable,
    RmgIdo,
    RmgGeneral,
}

impl ClassKind {
    pub const ALL: [ClassKind; 6] = [
        ClassKind::RestrictedGoods,
        ClassKind::RmgIdentical,
        ClassKind::BinaryMixed,
        ClassKind::Separable,
        ClassKind::RmgIdo,
        ClassKind::RmgGeneral,
    ];

    /// Whether a classified instance belongs to this class.
    pub fn admits(self, inst: &Instance) -> bool {
        let c = manna_core::classify(inst);
        let part = manna_core::partition_items(inst);
        match self {
            ClassKind::RestrictedGoods => {
                c.goods_only && c.restricted_mixed_goods && part.m_plus.len() == inst.items()
            }
            ClassKind::RmgIdentical => c.restricted_mixed_goods && c.identical_bads,
            ClassKind::BinaryMixed => c.binary_mixed_goods && c.identical_bads,
            ClassKind::Separable => c.separable,
            ClassKind::RmgIdo => c.restricted_mixed_goods && c.ido_bads,
            ClassKind::RmgGeneral => c.restricted_mixed_goods,
        }
    }

    fn restricted(self) -> bool {
        self != ClassKind::Separable
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenerateError {
    #[error("need at least one agent")]
    NoAgents,
    #[error("empty value range {lo}..{hi}")]
    EmptyRange { lo: i64, hi: i64 },
    #[error("value range {lo}..{hi} has no positive value, which this class needs for its goods")]
    NoPositiveValues { lo: i64, hi: i64 },
    #[error("no non-degenerate instance after {0} draws")]
    Degenerate(usize),
}

const MAX_DRAWS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenerateSpec {
    pub class: ClassKind,
    pub agents: usize,
    pub items: usize,
    pub seed: u64,
    pub lo: i64,
    pub hi: i64,
}

struct Draws(ChaCha8Rng);

impl Draws {
    fn int(&mut self, lo: i64, hi: i64) -> i64 {
        debug_assert!(lo <= hi);
        let span = (hi as i128 - lo as i128 + 1) as u128;
        if span > u64::MAX as u128 {
            return self.0.next_u64() as i64;
        }
        let span = span as u64;
        let zone = u64::MAX - (u64::MAX % span + 1) % span;
        loop {
            let x = self.0.next_u64();
            if x <= zone {
                return (lo as i128 + (x % span) as i128) as i64;
            }
        }
    }

    fn coin(&mut self) -> bool {
        self.int(0, 1) == 1
    }

    fn index(&mut self, len: usize) -> usize {
        self.int(0, len as i64 - 1) as usize
    }

    fn weighted(&mut self, weights: &[(Kind, i64)]) -> Kind {
        let total: i64 = weights.iter().map(|w| w.1).sum();
        let mut x = self.int(0, total - 1);
        for &(k, w) in weights {
            if x < w {
                return k;
            }
            x -= w;
        }
        unreachable!("weights cover the draw")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Good,
    Dummy,
    Bad,
}

pub fn generate(spec: &GenerateSpec) -> Result<Instance, GenerateError> {
    let GenerateSpec {
        class,
        agents: n,
        items: m,
        seed,
        lo,
        hi,
    } = *spec;
    if n == 0 {
        return Err(GenerateError::NoAgents);
    }
    if lo > hi {
        return Err(GenerateError::EmptyRange { lo, hi });
    }
    if class.restricted() && hi < 1 && m > 0 {
        return Err(GenerateError::NoPositiveValues { lo, hi });
    }
    if m == 0 {
        return Ok(Instance::empty(n).expect("n >= 1"));
    }
    let mut rng = Draws(ChaCha8Rng::seed_from_u64(seed));
    for _ in 0..MAX_DRAWS {
        let inst = draw(&mut rng, class, n, m, lo, hi);
        let part = manna_core::partition_items(&inst);
        let degenerate = (class.restricted() && part.m_plus.is_empty())
            || (0..n).all(|i| !inst.total_value(i).is_positive());
        if !degenerate {
            debug_assert!(class.admits(&inst));
            return Ok(inst);
        }
    }
    Err(GenerateError::Degenerate(MAX_DRAWS))
}

fn draw(rng: &mut Draws, class: ClassKind, n: usize, m: usize, lo: i64, hi: i64) -> Instance {
    let bads_possible = lo <= -1;
    let mut kinds: Vec<(Kind, i64)> = Vec::new();
    let goods_weight = if class == ClassKind::Separable { 3 } else { 6 };
    if class != ClassKind::Separable || hi >= 0 || !bads_possible {
        kinds.push((Kind::Good, goods_weight));
    }
    if !matches!(class, ClassKind::RestrictedGoods | ClassKind::Separable) {
        kinds.push((Kind::Dummy, rng.int(0, 2)));
    }
    if bads_possible && class != ClassKind::RestrictedGoods {
        kinds.push((Kind::Bad, rng.int(0, 4)));
    }
    if kinds.iter().all(|k| k.1 == 0) {
        // Only bads are possible and their weight came out zero.
        kinds[0].1 = 1;
    }
    let nonpos_lo = lo.min(0);
    let bad_hi = hi.min(-1);
    let binary_value = if class == ClassKind::BinaryMixed {
        Some(rng.int(1, hi))
    } else {
        None
    };

    let mut cols: Vec<Vec<i64>> = Vec::with_capacity(m);
    let mut bad_cols = Vec::new();
    for j in 0..m {
        let kind = rng.weighted(&kinds);
        let col = match (class, kind) {
            (ClassKind::Separable, Kind::Good) => {
                (0..n).map(|_| rng.int(lo.max(0), hi.max(0))).collect()
            }
            (_, Kind::Good) => {
                let v = binary_value.unwrap_or_else(|| rng.int(1, hi));
                let mut likes: Vec<bool> = (0..n).map(|_| rng.coin()).collect();
                if !likes.contains(&true) {
                    let k = rng.index(n);
                    likes[k] = true;
                }
                likes
                    .into_iter()
                    .map(|l| match (l, class) {
                        (true, _) => v,
                        (false, ClassKind::RestrictedGoods) => 0,
                        (false, _) => rng.int(lo.max(-v).min(0), 0),
                    })
                    .collect()
            }
            (_, Kind::Dummy) => {
                let mut col: Vec<i64> = (0..n).map(|_| rng.int(nonpos_lo, 0)).collect();
                let k = rng.index(n);
                col[k] = 0;
                col
            }
            (ClassKind::RmgIdentical | ClassKind::BinaryMixed, Kind::Bad) => {
                let v = rng.int(lo, bad_hi);
                vec![v; n]
            }
            (_, Kind::Bad) => {
                bad_cols.push(j);
                (0..n).map(|_| rng.int(lo, bad_hi)).collect()
            }
        };
        cols.push(col);
    }

    if class == ClassKind::RmgIdo && bad_cols.len() > 1 {
        // Common worst-first order over the bad columns.
        let mut order = bad_cols.clone();
        for k in (1..order.len()).rev() {
            let r = rng.index(k + 1);
            order.swap(k, r);
        }
        #[allow(clippy::needless_range_loop)]
        for i in 0..n {
            let mut vals: Vec<i64> = bad_cols.iter().map(|&j| cols[j][i]).collect();
            vals.sort_unstable();
            for (&j, v) in order.iter().zip(vals) {
                cols[j][i] = v;
            }
        }
    }

    let rows = (0..n)
        .map(|i| cols.iter().map(|c| Rational::from(c[i])).collect())
        .collect();
    Instance::new(rows).expect("rectangular by construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(class: ClassKind, seed: u64) -> GenerateSpec {
        GenerateSpec {
            class,
            agents: 3,
            items: 6,
            seed,
            lo: -9,
            hi: 9,
        }
    }

    #[test]
    fn every_class_is_admitted() {
        for class in ClassKind::ALL {
            for seed in 0..50 {
                let inst = generate(&spec(class, seed)).unwrap();
                assert!(class.admits(&inst), "{class:?} seed {seed}");
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate(&spec(ClassKind::RmgIdo, 7)).unwrap();
        let b = generate(&spec(ClassKind::RmgIdo, 7)).unwrap();
        let c = generate(&spec(ClassKind::RmgIdo, 8)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn binary_mixed_example() {
        let inst = generate(&GenerateSpec {
            class: ClassKind::BinaryMixed,
            agents: 3,
            items: 5,
            seed: 7,
            lo: -9,
            hi: 9,
        })
        .unwrap();
        let c = manna_core::classify(&inst);
        assert!(c.binary_mixed_goods && c.identical_bads);
    }

    #[test]
    fn empty_and_bad_ranges() {
        let mut s = spec(ClassKind::Separable, 1);
        s.items = 0;
        assert_eq!(generate(&s).unwrap().items(), 0);
        let mut s = spec(ClassKind::RmgGeneral, 1);
        s.hi = 0;
        assert!(matches!(
            generate(&s),
            Err(GenerateError::NoPositiveValues { .. })
        ));
        s.lo = 3;
        s.hi = 2;
        assert!(matches!(
            generate(&s),
            Err(GenerateError::EmptyRange { .. })
        ));
    }

    #[test]
    fn uniform_draw_stays_in_range() {
        let mut d = Draws(ChaCha8Rng::seed_from_u64(0));
        for _ in 0..1000 {
            let x = d.int(-3, 4);
            assert!((-3..=4).contains(&x));
        }
        assert_eq!(d.int(5, 5), 5);
        let _ = d.int(i64::MIN, i64::MAX);
    }
}
