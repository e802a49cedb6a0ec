//! Deterministic sampling of lattice points, exchanges and rectangle sets
//! for the property and acceptance suites.

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use crate::flips::FlipMap;
use crate::ground::{GroundNum, Rat};
use crate::iet::IetMap;
use crate::lattice::Lattice;
use crate::regions::RectangleSet;

/// SplitMix64: tiny, seedable, identical on every platform.
#[derive(Clone)]
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Rng {
        Rng(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }

    pub fn int_in(&mut self, lo: i64, hi: i64) -> i64 {
        lo + self.below((hi - lo + 1) as u64) as i64
    }

    pub fn shuffle<T>(&mut self, v: &mut [T]) {
        for i in (1..v.len()).rev() {
            let j = self.below((i + 1) as u64) as usize;
            v.swap(i, j);
        }
    }

    /// A random permutation of `0..n`.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut v: Vec<usize> = (0..n).collect();
        self.shuffle(&mut v);
        v
    }
}

/// A random lattice point in `[0, 1)`: a small random integer combination of
/// the basis, reduced modulo 1.
pub fn point_in_unit(rng: &mut Rng, lattice: &Lattice) -> GroundNum {
    let coords: Vec<BigInt> = (0..lattice.rank())
        .map(|_| BigInt::from(rng.int_in(-4, 4)))
        .collect();
    let x = lattice.element_from_coords(&coords);
    let fl = x.floor();
    x.sub_ref(&lattice.field().rational(Rat::from(fl)))
}

/// A random positive lattice point strictly inside `(0, hi)`.  The
/// coordinate range scales with the reciprocal of the bound and widens
/// further on failure, so small bounds are reachable even though nearby
/// lattice points need large coordinates.
pub fn positive_below(rng: &mut Rng, lattice: &Lattice, hi: &GroundNum) -> GroundNum {
    let recip = lattice
        .one()
        .div_ref(hi)
        .map(|q| q.floor())
        .unwrap_or_else(|_| BigInt::from(1));
    let mut range = 4 + 4 * recip.to_i64().unwrap_or(1).clamp(0, 10_000);
    for attempt in 0..10_000u32 {
        if attempt % 200 == 199 {
            range *= 2;
        }
        let coords: Vec<BigInt> = (0..lattice.rank())
            .map(|_| BigInt::from(rng.int_in(-range, range)))
            .collect();
        let raw = lattice.element_from_coords(&coords);
        let fl = raw.floor();
        let x = raw.sub_ref(&lattice.field().rational(Rat::from(fl)));
        if x.sign() > 0 && x.sub_ref(hi).sign() < 0 {
            return x;
        }
    }
    panic!("could not sample a positive lattice point below the bound");
}

/// A random lattice point with `lo <= x <= hi`, widening the coordinate
/// range on failure.
pub fn point_in_range(
    rng: &mut Rng,
    lattice: &Lattice,
    lo: &GroundNum,
    hi: &GroundNum,
) -> GroundNum {
    let mut range = 4i64;
    for attempt in 0..20_000u32 {
        if attempt % 200 == 199 {
            range = (range * 2).min(1 << 24);
        }
        let coords: Vec<BigInt> = (0..lattice.rank())
            .map(|_| BigInt::from(rng.int_in(-range, range)))
            .collect();
        let raw = lattice.element_from_coords(&coords);
        let fl = raw.floor();
        let x = raw.sub_ref(&lattice.field().rational(Rat::from(fl)));
        if x.sub_ref(lo).sign() >= 0 && x.sub_ref(hi).sign() <= 0 {
            return x;
        }
    }
    panic!("could not sample a lattice point in the range");
}

/// A random exchange on at most `max_intervals` intervals.
pub fn random_iet(rng: &mut Rng, lattice: &Lattice, max_intervals: usize) -> IetMap {
    let k = rng.below(max_intervals as u64).max(1) as usize;
    let mut breaks: Vec<GroundNum> = vec![lattice.zero(), lattice.one()];
    while breaks.len() < k + 1 {
        let x = point_in_unit(rng, lattice);
        if x.sign() > 0 && !breaks.contains(&x) {
            breaks.push(x);
        }
    }
    breaks.sort();
    let alphas: Vec<GroundNum> = breaks.windows(2).map(|w| w[1].sub_ref(&w[0])).collect();
    let tau = rng.permutation(alphas.len());
    IetMap::from_description(lattice, &alphas, &tau).expect("sampled description is valid")
}

/// A random exchange with flips on at most `max_intervals` intervals.
pub fn random_flip(rng: &mut Rng, lattice: &Lattice, max_intervals: usize) -> FlipMap {
    let base = random_iet(rng, lattice, max_intervals);
    let alphas = base.lengths();
    let tau = base.tau().to_vec();
    let signs: Vec<bool> = (0..alphas.len()).map(|_| rng.below(2) == 1).collect();
    FlipMap::from_description(lattice, &alphas, &tau, &signs)
        .expect("sampled description is valid")
}

/// A random rectangle set with at most `max_rects` generating rectangles.
pub fn random_rectangles(rng: &mut Rng, lattice: &Lattice, max_rects: usize) -> RectangleSet {
    let n = rng.below(max_rects as u64 + 1) as usize;
    let mut rects = Vec::new();
    for _ in 0..n {
        let mut xs = [point_in_unit(rng, lattice), point_in_unit(rng, lattice)];
        let mut ys = [point_in_unit(rng, lattice), point_in_unit(rng, lattice)];
        xs.sort();
        ys.sort();
        if xs[0] == xs[1] || ys[0] == ys[1] {
            continue;
        }
        rects.push(((xs[0].clone(), xs[1].clone()), (ys[0].clone(), ys[1].clone())));
    }
    RectangleSet::from_rects(lattice, rects).expect("sampled endpoints are lattice points")
}

/// A random transposition (type below 1/2, disjoint supports).
pub fn random_transposition(rng: &mut Rng, lattice: &Lattice) -> IetMap {
    for _ in 0..10_000 {
        let a = point_in_unit(rng, lattice);
        if a.sign() <= 0 {
            continue;
        }
        let p1 = point_in_unit(rng, lattice);
        let p2 = point_in_unit(rng, lattice);
        let (lo, hi) = if p1 <= p2 { (&p1, &p2) } else { (&p2, &p1) };
        if lo.add_ref(&a).sub_ref(hi).sign() <= 0
            && hi.add_ref(&a).sub_ref(&lattice.one()).sign() <= 0
        {
            return IetMap::transposition(lattice, &a, lo, hi)
                .expect("sampled transposition is valid");
        }
    }
    panic!("could not sample a transposition");
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground::Field;
    use crate::lattice::Lattice;

    #[test]
    fn sampling_is_deterministic_and_valid() {
        let field = Field::sqrt2();
        let t = field.theta();
        let l = Lattice::from_generators(&field, &[t]).unwrap();
        let mut r1 = Rng::new(7);
        let mut r2 = Rng::new(7);
        for _ in 0..10 {
            let f1 = random_iet(&mut r1, &l, 8);
            let f2 = random_iet(&mut r2, &l, 8);
            assert!(f1 == f2);
            let x = point_in_unit(&mut r1, &l);
            let _ = point_in_unit(&mut r2, &l);
            assert!(x.sign() >= 0 && x.sub_ref(&l.one()).sign() < 0);
            assert!(l.contains(&x));
        }
        let tr = random_transposition(&mut r1, &l);
        assert_eq!(tr.compose(&tr).unwrap().is_identity(), true);
    }
}
