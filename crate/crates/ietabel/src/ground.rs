//! Exact arithmetic and sign determination in a real algebraic number field.
//!
//! A field is `Q[x]/(m)` for a monic irreducible `m` together with an
//! isolating interval pinning down which real root `theta` is meant.  Values
//! are rational coordinate vectors in the power basis `1, theta, ...,
//! theta^(d-1)`.  The zero test is purely symbolic (all coordinates zero) and
//! the sign of a nonzero value is obtained by bisecting the root enclosure
//! until interval evaluation excludes zero; irreducibility guarantees this
//! terminates.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::{Error, Result};

pub type Rat = BigRational;

/// Convenience constructor for exact rationals.
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

// ---------------------------------------------------------------------------
// dense little-endian polynomials over Q

fn ptrim(p: &mut Vec<Rat>) {
    while p.last().map_or(false, |c| c.is_zero()) {
        p.pop();
    }
}

fn pdeg(p: &[Rat]) -> Option<usize> {
    if p.is_empty() {
        None
    } else {
        Some(p.len() - 1)
    }
}

fn peval(p: &[Rat], x: &Rat) -> Rat {
    let mut acc = Rat::zero();
    for c in p.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

fn pderiv(p: &[Rat]) -> Vec<Rat> {
    let mut out = Vec::new();
    for (i, c) in p.iter().enumerate().skip(1) {
        out.push(c * Rat::from(BigInt::from(i)));
    }
    ptrim(&mut out);
    out
}

fn pmul(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Rat::zero(); a.len() + b.len() - 1];
    for (i, ca) in a.iter().enumerate() {
        if ca.is_zero() {
            continue;
        }
        for (j, cb) in b.iter().enumerate() {
            out[i + j] = &out[i + j] + ca * cb;
        }
    }
    ptrim(&mut out);
    out
}

fn padd(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    let n = a.len().max(b.len());
    let mut out = vec![Rat::zero(); n];
    for (i, c) in a.iter().enumerate() {
        out[i] = &out[i] + c;
    }
    for (i, c) in b.iter().enumerate() {
        out[i] = &out[i] + c;
    }
    ptrim(&mut out);
    out
}

fn pscale(a: &[Rat], s: &Rat) -> Vec<Rat> {
    let mut out: Vec<Rat> = a.iter().map(|c| c * s).collect();
    ptrim(&mut out);
    out
}

/// Remainder of `a` by `b` (`b` nonzero), both over Q.
fn prem(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    let db = pdeg(b).expect("division by zero polynomial");
    let lead = b[db].clone();
    let mut r = a.to_vec();
    ptrim(&mut r);
    while let Some(dr) = pdeg(&r) {
        if dr < db {
            break;
        }
        let q = &r[dr] / &lead;
        let shift = dr - db;
        for (i, c) in b.iter().enumerate() {
            r[i + shift] = &r[i + shift] - &q * c;
        }
        ptrim(&mut r);
    }
    r
}

fn pmonic(mut p: Vec<Rat>) -> Vec<Rat> {
    if let Some(d) = pdeg(&p) {
        let lead = p[d].clone();
        if !lead.is_one() {
            p = pscale(&p, &(Rat::one() / lead));
        }
    }
    p
}

fn pgcd(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    ptrim(&mut a);
    ptrim(&mut b);
    while !b.is_empty() {
        let r = prem(&a, &b);
        a = b;
        b = r;
    }
    pmonic(a)
}

/// Extended gcd: returns `u` with `u*a == gcd(a, m) (mod m)`; used for
/// inversion where the gcd is a nonzero constant.
fn pinv_mod(a: &[Rat], m: &[Rat]) -> Option<Vec<Rat>> {
    // extended Euclid keeping only the Bezout coefficient of `a`
    let mut r0 = m.to_vec();
    let mut r1 = a.to_vec();
    ptrim(&mut r0);
    ptrim(&mut r1);
    let mut u0: Vec<Rat> = Vec::new();
    let mut u1: Vec<Rat> = vec![Rat::one()];
    while !r1.is_empty() {
        // quotient of r0 by r1
        let d1 = pdeg(&r1).unwrap();
        let lead = r1[d1].clone();
        let mut q = Vec::new();
        let mut r = r0.clone();
        while let Some(dr) = pdeg(&r) {
            if dr < d1 {
                break;
            }
            let c = &r[dr] / &lead;
            let shift = dr - d1;
            if q.len() < shift + 1 {
                q.resize(shift + 1, Rat::zero());
            }
            q[shift] = &q[shift] + &c;
            for (i, bc) in r1.iter().enumerate() {
                r[i + shift] = &r[i + shift] - &c * bc;
            }
            ptrim(&mut r);
        }
        ptrim(&mut q);
        let u2 = padd(&u0, &pscale(&pmul(&q, &u1), &-Rat::one()));
        r0 = r1;
        r1 = r;
        u0 = u1;
        u1 = u2;
    }
    // r0 = gcd, u0 * a == r0 (mod m)
    let d = pdeg(&r0)?;
    if d != 0 {
        return None; // not invertible
    }
    let c = Rat::one() / r0[0].clone();
    Some(pscale(&u0, &c))
}

// ---------------------------------------------------------------------------
// Sturm sequences (root counting on an interval)

fn sturm_sequence(p: &[Rat]) -> Vec<Vec<Rat>> {
    let mut seq = vec![p.to_vec(), pderiv(p)];
    loop {
        let n = seq.len();
        if seq[n - 1].is_empty() {
            seq.pop();
            break;
        }
        let mut r = prem(&seq[n - 2], &seq[n - 1]);
        ptrim(&mut r);
        if r.is_empty() {
            break;
        }
        seq.push(pscale(&r, &-Rat::one()));
    }
    seq
}

fn sign_variations(seq: &[Vec<Rat>], x: &Rat) -> usize {
    let mut prev = 0i32;
    let mut count = 0;
    for p in seq {
        let v = peval(p, x);
        let s = if v.is_zero() {
            0
        } else if v.is_positive() {
            1
        } else {
            -1
        };
        if s != 0 {
            if prev != 0 && s != prev {
                count += 1;
            }
            prev = s;
        }
    }
    count
}

/// Number of distinct real roots of squarefree `p` in `(lo, hi]`.
fn count_roots(p: &[Rat], lo: &Rat, hi: &Rat) -> usize {
    let seq = sturm_sequence(p);
    sign_variations(&seq, lo) - sign_variations(&seq, hi)
}

// ---------------------------------------------------------------------------
// irreducibility over Z (Kronecker trial factorization; desk-scale inputs)

fn divisors(n: &BigInt) -> Vec<BigInt> {
    let mut n = n.abs();
    let mut primes: Vec<(BigInt, u32)> = Vec::new();
    let mut p = BigInt::from(2);
    while &p * &p <= n {
        let mut e = 0;
        while (&n % &p).is_zero() {
            n = n / &p;
            e += 1;
        }
        if e > 0 {
            primes.push((p.clone(), e));
        }
        p += 1;
    }
    if n > BigInt::one() {
        primes.push((n, 1));
    }
    let mut divs = vec![BigInt::one()];
    for (p, e) in primes {
        let mut next = Vec::new();
        for d in &divs {
            let mut pk = BigInt::one();
            for _ in 0..=e {
                next.push(d * &pk);
                pk = &pk * &p;
            }
        }
        divs = next;
    }
    let mut out = Vec::new();
    for d in divs {
        out.push(-&d);
        out.push(d);
    }
    out.sort();
    out.dedup();
    out
}

fn lagrange(points: &[(Rat, Rat)]) -> Vec<Rat> {
    let mut acc: Vec<Rat> = Vec::new();
    for (i, (xi, yi)) in points.iter().enumerate() {
        let mut term = vec![yi.clone()];
        for (j, (xj, _)) in points.iter().enumerate() {
            if i == j {
                continue;
            }
            let denom = xi - xj;
            // term *= (x - xj) / (xi - xj)
            term = pmul(&term, &[-xj / &denom, Rat::one() / denom]);
        }
        acc = padd(&acc, &term);
    }
    acc
}

/// Is monic `f` (integer coefficients, degree >= 1) irreducible over Q?
fn is_irreducible(f: &[BigInt]) -> bool {
    let d = f.len() - 1;
    if d == 1 {
        return true;
    }
    let fq: Vec<Rat> = f.iter().map(|c| Rat::from(c.clone())).collect();
    for k in 1..=d / 2 {
        // sample points 0, 1, -1, 2, -2, ...
        let points: Vec<BigInt> = (0..k + 1)
            .map(|i| {
                let m = (i + 1) / 2;
                if i % 2 == 1 {
                    BigInt::from(m)
                } else {
                    -BigInt::from(m)
                }
            })
            .collect();
        let values: Vec<BigInt> = points
            .iter()
            .map(|t| {
                let tq = Rat::from(t.clone());
                let v = peval(&fq, &tq);
                v.to_integer()
            })
            .collect();
        if values.iter().any(|v| v.is_zero()) {
            return false; // integer root
        }
        let divlists: Vec<Vec<BigInt>> = values.iter().map(divisors).collect();
        let mut idx = vec![0usize; k + 1];
        loop {
            let pts: Vec<(Rat, Rat)> = points
                .iter()
                .zip(idx.iter().enumerate())
                .map(|(x, (slot, &i))| (Rat::from(x.clone()), Rat::from(divlists[slot][i].clone())))
                .collect();
            let g = lagrange(&pts);
            if pdeg(&g) == Some(k)
                && g.iter().all(|c| c.is_integer())
                && g[k].is_one()
                && prem(&fq, &g).is_empty()
            {
                return false;
            }
            // advance the multi-index
            let mut carry = true;
            for slot in 0..=k {
                if carry {
                    idx[slot] += 1;
                    if idx[slot] == divlists[slot].len() {
                        idx[slot] = 0;
                    } else {
                        carry = false;
                    }
                }
            }
            if carry {
                break;
            }
        }
    }
    true
}

// ---------------------------------------------------------------------------
// rational interval arithmetic for enclosure evaluation

#[derive(Clone)]
struct RInt {
    lo: Rat,
    hi: Rat,
}

impl RInt {
    fn point(x: &Rat) -> RInt {
        RInt {
            lo: x.clone(),
            hi: x.clone(),
        }
    }

    fn add(&self, o: &RInt) -> RInt {
        RInt {
            lo: &self.lo + &o.lo,
            hi: &self.hi + &o.hi,
        }
    }

    fn mul(&self, o: &RInt) -> RInt {
        let cands = [
            &self.lo * &o.lo,
            &self.lo * &o.hi,
            &self.hi * &o.lo,
            &self.hi * &o.hi,
        ];
        let mut lo = cands[0].clone();
        let mut hi = cands[0].clone();
        for c in &cands[1..] {
            if *c < lo {
                lo = c.clone();
            }
            if *c > hi {
                hi = c.clone();
            }
        }
        RInt { lo, hi }
    }
}

fn interval_eval(p: &[Rat], x: &RInt) -> RInt {
    let mut acc = RInt::point(&Rat::zero());
    for c in p.iter().rev() {
        acc = acc.mul(x).add(&RInt::point(c));
    }
    acc
}

// ---------------------------------------------------------------------------
// the field

/// Construction data for a ground field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldSpec {
    /// Integer coefficients of the monic minimal polynomial, constant first.
    pub minpoly: Vec<BigInt>,
    /// Rational interval containing exactly one real root.
    pub isolating: (Rat, Rat),
}

struct Enclosure {
    lo: Rat,
    hi: Rat,
    f_lo_positive: bool,
}

struct FieldInner {
    minpoly: Vec<BigInt>,
    mp_q: Vec<Rat>,
    isolating: (Rat, Rat),
    // monotonically refined root enclosure; an optimization only
    cache: Mutex<Enclosure>,
}

/// A real algebraic number field with a distinguished root.
#[derive(Clone)]
pub struct Field(Arc<FieldInner>);

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.minpoly == other.0.minpoly && self.0.isolating == other.0.isolating)
    }
}

impl Eq for Field {}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Field(deg {})", self.degree())
    }
}

impl Field {
    pub fn new(spec: FieldSpec) -> Result<Field> {
        let mut mp = spec.minpoly.clone();
        while mp.last().map_or(false, |c| c.is_zero()) {
            mp.pop();
        }
        if mp.len() < 2 {
            return Err(Error::BadPolynomial("degree must be at least 1".into()));
        }
        if !mp.last().unwrap().is_one() {
            return Err(Error::BadPolynomial("not monic".into()));
        }
        let mp_q: Vec<Rat> = mp.iter().map(|c| Rat::from(c.clone())).collect();
        let g = pgcd(&mp_q, &pderiv(&mp_q));
        if pdeg(&g) != Some(0) {
            return Err(Error::BadPolynomial("not square-free".into()));
        }
        if !is_irreducible(&mp) {
            return Err(Error::BadPolynomial("reducible over Q".into()));
        }
        let (lo, hi) = spec.isolating.clone();
        if lo >= hi {
            return Err(Error::BadInterval("empty interval".into()));
        }
        if count_roots(&mp_q, &lo, &hi) != 1 {
            return Err(Error::BadInterval(
                "interval must contain exactly one root".into(),
            ));
        }
        // For degree >= 2 an irreducible polynomial has no rational roots, so
        // the endpoints are safe.  For degree 1 nudge the enclosure so the
        // (rational) root is interior; it is never consulted anyway.
        let mut lo = lo;
        let f_lo = peval(&mp_q, &lo);
        if f_lo.is_zero() {
            lo = &lo - Rat::one();
        }
        let f_lo_positive = peval(&mp_q, &lo).is_positive();
        Ok(Field(Arc::new(FieldInner {
            minpoly: mp,
            mp_q,
            isolating: spec.isolating,
            cache: Mutex::new(Enclosure {
                lo,
                hi,
                f_lo_positive,
            }),
        })))
    }

    /// The rational field presented as `Q[x]/(x)`.
    pub fn rationals() -> Field {
        Field::new(FieldSpec {
            minpoly: vec![BigInt::zero(), BigInt::one()],
            isolating: (rat(-1, 1), rat(1, 1)),
        })
        .expect("x is irreducible")
    }

    /// `Q(sqrt(2))`, used widely by tests and examples.
    pub fn sqrt2() -> Field {
        Field::new(FieldSpec {
            minpoly: vec![BigInt::from(-2), BigInt::zero(), BigInt::one()],
            isolating: (rat(1, 1), rat(2, 1)),
        })
        .expect("x^2 - 2 is irreducible")
    }

    pub fn degree(&self) -> usize {
        self.0.minpoly.len() - 1
    }

    pub fn spec(&self) -> FieldSpec {
        FieldSpec {
            minpoly: self.0.minpoly.clone(),
            isolating: self.0.isolating.clone(),
        }
    }

    pub fn zero(&self) -> GroundNum {
        self.rational(Rat::zero())
    }

    pub fn one(&self) -> GroundNum {
        self.rational(Rat::one())
    }

    pub fn rational(&self, r: Rat) -> GroundNum {
        let mut coords = vec![Rat::zero(); self.degree()];
        coords[0] = r;
        GroundNum {
            field: self.clone(),
            coords,
        }
    }

    pub fn integer(&self, n: i64) -> GroundNum {
        self.rational(Rat::from(BigInt::from(n)))
    }

    /// The distinguished root as a field element.
    pub fn theta(&self) -> GroundNum {
        if self.degree() == 1 {
            // root of the linear minpoly
            let root = -Rat::from(self.0.minpoly[0].clone());
            return self.rational(root);
        }
        let mut coords = vec![Rat::zero(); self.degree()];
        coords[1] = Rat::one();
        GroundNum {
            field: self.clone(),
            coords,
        }
    }

    pub fn from_coords(&self, coords: Vec<Rat>) -> Result<GroundNum> {
        if coords.len() != self.degree() {
            return Err(Error::OutOfRange(format!(
                "expected {} coordinates, got {}",
                self.degree(),
                coords.len()
            )));
        }
        Ok(GroundNum {
            field: self.clone(),
            coords,
        })
    }

    /// Sign of the value with coordinate vector `coords`.
    fn sign_of(&self, coords: &[Rat]) -> i32 {
        if coords.iter().all(|c| c.is_zero()) {
            return 0;
        }
        if coords[1..].iter().all(|c| c.is_zero()) {
            return sign_rat(&coords[0]);
        }
        let mut p: Vec<Rat> = coords.to_vec();
        ptrim(&mut p);
        let mut enc = self.0.cache.lock().unwrap();
        loop {
            let iv = interval_eval(
                &p,
                &RInt {
                    lo: enc.lo.clone(),
                    hi: enc.hi.clone(),
                },
            );
            if iv.lo.is_positive() {
                return 1;
            }
            if iv.hi.is_negative() {
                return -1;
            }
            // bisect; the midpoint is never a root of an irreducible
            // polynomial of degree >= 2
            let mid = (&enc.lo + &enc.hi) / Rat::from(BigInt::from(2));
            let f_mid = peval(&self.0.mp_q, &mid);
            debug_assert!(!f_mid.is_zero());
            if f_mid.is_positive() == enc.f_lo_positive {
                enc.lo = mid;
            } else {
                enc.hi = mid;
            }
        }
    }

    /// Current enclosure endpoints (refined as a side effect of `sign`).
    fn enclosure(&self) -> (Rat, Rat) {
        let enc = self.0.cache.lock().unwrap();
        (enc.lo.clone(), enc.hi.clone())
    }
}

fn sign_rat(r: &Rat) -> i32 {
    if r.is_zero() {
        0
    } else if r.is_positive() {
        1
    } else {
        -1
    }
}

// ---------------------------------------------------------------------------
// field elements

/// An exact element of the ground field, as power-basis coordinates.
#[derive(Clone)]
pub struct GroundNum {
    field: Field,
    coords: Vec<Rat>,
}

impl GroundNum {
    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn coords(&self) -> &[Rat] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero())
    }

    pub fn is_rational(&self) -> bool {
        self.coords[1..].iter().all(|c| c.is_zero())
    }

    pub fn to_rational(&self) -> Option<Rat> {
        if self.is_rational() {
            Some(self.coords[0].clone())
        } else {
            None
        }
    }

    pub fn sign(&self) -> i32 {
        self.field.sign_of(&self.coords)
    }

    pub fn is_positive(&self) -> bool {
        self.sign() > 0
    }

    fn same_field(&self, other: &GroundNum) {
        assert!(
            self.field == other.field,
            "ground numbers from different fields"
        );
    }

    pub fn add_ref(&self, other: &GroundNum) -> GroundNum {
        self.same_field(other);
        let coords = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a + b)
            .collect();
        GroundNum {
            field: self.field.clone(),
            coords,
        }
    }

    pub fn sub_ref(&self, other: &GroundNum) -> GroundNum {
        self.same_field(other);
        let coords = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a - b)
            .collect();
        GroundNum {
            field: self.field.clone(),
            coords,
        }
    }

    pub fn neg_ref(&self) -> GroundNum {
        GroundNum {
            field: self.field.clone(),
            coords: self.coords.iter().map(|c| -c).collect(),
        }
    }

    pub fn mul_ref(&self, other: &GroundNum) -> GroundNum {
        self.same_field(other);
        let prod = pmul(&self.coords, &other.coords);
        let red = prem(&prod, &self.field.0.mp_q);
        let mut coords = red;
        coords.resize(self.field.degree(), Rat::zero());
        GroundNum {
            field: self.field.clone(),
            coords,
        }
    }

    pub fn inv(&self) -> Result<GroundNum> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let mut p = self.coords.clone();
        ptrim(&mut p);
        let u = pinv_mod(&p, &self.field.0.mp_q).ok_or(Error::DivisionByZero)?;
        let red = prem(&u, &self.field.0.mp_q);
        let mut coords = red;
        coords.resize(self.field.degree(), Rat::zero());
        Ok(GroundNum {
            field: self.field.clone(),
            coords,
        })
    }

    pub fn div_ref(&self, other: &GroundNum) -> Result<GroundNum> {
        Ok(self.mul_ref(&other.inv()?))
    }

    pub fn scale(&self, s: &Rat) -> GroundNum {
        GroundNum {
            field: self.field.clone(),
            coords: self.coords.iter().map(|c| c * s).collect(),
        }
    }

    /// Largest integer not exceeding the value.
    pub fn floor(&self) -> BigInt {
        if let Some(r) = self.to_rational() {
            return r.floor().to_integer();
        }
        // irrational, so the enclosure eventually separates from integers
        let mut p = self.coords.clone();
        ptrim(&mut p);
        loop {
            let (lo, hi) = self.field.enclosure();
            let iv = interval_eval(&p, &RInt { lo, hi });
            let flo = iv.lo.floor().to_integer();
            let fhi = iv.hi.floor().to_integer();
            if flo == fhi {
                return flo;
            }
            refine_once(&self.field);
        }
    }

    pub fn abs(&self) -> GroundNum {
        if self.sign() < 0 {
            self.neg_ref()
        } else {
            self.clone()
        }
    }

    pub fn min_ref(&self, other: &GroundNum) -> GroundNum {
        if self <= other {
            self.clone()
        } else {
            other.clone()
        }
    }
}

fn refine_once(field: &Field) {
    let mut enc = field.0.cache.lock().unwrap();
    let mid = (&enc.lo + &enc.hi) / Rat::from(BigInt::from(2));
    let f_mid = peval(&field.0.mp_q, &mid);
    if f_mid.is_zero() {
        return;
    }
    if f_mid.is_positive() == enc.f_lo_positive {
        enc.lo = mid;
    } else {
        enc.hi = mid;
    }
}

impl PartialEq for GroundNum {
    fn eq(&self, other: &Self) -> bool {
        self.field == other.field && self.coords == other.coords
    }
}

impl Eq for GroundNum {}

impl PartialOrd for GroundNum {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for GroundNum {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.sub_ref(other).sign() {
            0 => Ordering::Equal,
            s if s > 0 => Ordering::Greater,
            _ => Ordering::Less,
        }
    }
}

impl fmt::Debug for GroundNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for GroundNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}/{}", c.numer(), c.denom())?;
        }
        write!(f, ")")
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $impl:ident) => {
        impl $trait for &GroundNum {
            type Output = GroundNum;
            fn $method(self, rhs: &GroundNum) -> GroundNum {
                self.$impl(rhs)
            }
        }
        impl $trait for GroundNum {
            type Output = GroundNum;
            fn $method(self, rhs: GroundNum) -> GroundNum {
                (&self).$impl(&rhs)
            }
        }
    };
}

binop!(Add, add, add_ref);
binop!(Sub, sub, sub_ref);
binop!(Mul, mul, mul_ref);

impl Neg for &GroundNum {
    type Output = GroundNum;
    fn neg(self) -> GroundNum {
        self.neg_ref()
    }
}

impl Neg for GroundNum {
    type Output = GroundNum;
    fn neg(self) -> GroundNum {
        self.neg_ref()
    }
}

impl Div for &GroundNum {
    type Output = GroundNum;
    fn div(self, rhs: &GroundNum) -> GroundNum {
        self.div_ref(rhs).expect("division by zero")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sqrt2() -> (Field, GroundNum) {
        let f = Field::sqrt2();
        let t = f.theta();
        (f, t)
    }

    #[test]
    fn degree_one_is_plain_rationals() {
        let f = Field::rationals();
        assert_eq!(f.degree(), 1);
        let a = f.rational(rat(3, 2));
        let b = f.rational(rat(-1, 2));
        assert_eq!((a + b).to_rational(), Some(rat(1, 1)));
    }

    #[test]
    fn quadratic_field_basics() {
        let (f, t) = sqrt2();
        assert_eq!(f.degree(), 2);
        // theta^2 = 2
        assert_eq!(t.mul_ref(&t), f.integer(2));
        // (2 - sqrt2) + (sqrt2 - 1) = 1
        let a = f.integer(2).sub_ref(&t);
        let b = t.sub_ref(&f.one());
        assert_eq!(a.add_ref(&b), f.one());
    }

    #[test]
    fn reducible_polynomials_rejected() {
        let r = Field::new(FieldSpec {
            minpoly: vec![BigInt::from(-4), BigInt::zero(), BigInt::one()],
            isolating: (rat(1, 1), rat(3, 1)),
        });
        assert!(matches!(r, Err(Error::BadPolynomial(_))));
        // x^2 + 2x + 1 = (x+1)^2 is not square-free
        let r = Field::new(FieldSpec {
            minpoly: vec![BigInt::one(), BigInt::from(2), BigInt::one()],
            isolating: (rat(-2, 1), rat(0, 1)),
        });
        assert!(matches!(r, Err(Error::BadPolynomial(_))));
        let r = Field::new(FieldSpec {
            minpoly: vec![BigInt::from(-2), BigInt::zero(), BigInt::from(3)],
            isolating: (rat(0, 1), rat(1, 1)),
        });
        assert!(matches!(r, Err(Error::BadPolynomial(_))));
    }

    #[test]
    fn bad_intervals_rejected() {
        // x^2 - 2 has no root in [2, 3] and two roots in [-2, 2]
        let r = Field::new(FieldSpec {
            minpoly: vec![BigInt::from(-2), BigInt::zero(), BigInt::one()],
            isolating: (rat(2, 1), rat(3, 1)),
        });
        assert!(matches!(r, Err(Error::BadInterval(_))));
        let r = Field::new(FieldSpec {
            minpoly: vec![BigInt::from(-2), BigInt::zero(), BigInt::one()],
            isolating: (rat(-2, 1), rat(2, 1)),
        });
        assert!(matches!(r, Err(Error::BadInterval(_))));
    }

    #[test]
    fn inverse_of_theta() {
        let (f, t) = sqrt2();
        let inv = t.inv().unwrap();
        assert_eq!(inv.coords(), &[rat(0, 1), rat(1, 2)]);
        assert_eq!(t.mul_ref(&inv), f.one());
    }

    #[test]
    fn signs() {
        let (f, t) = sqrt2();
        assert_eq!(f.zero().sign(), 0);
        // 3/2 - sqrt2 > 0
        assert_eq!(f.rational(rat(3, 2)).sub_ref(&t).sign(), 1);
        // 3 - 2 sqrt2 > 0, 2 sqrt2 - 3 < 0
        let x = f.integer(3).sub_ref(&t.scale(&rat(2, 1)));
        assert_eq!(x.sign(), 1);
        assert_eq!(x.neg_ref().sign(), -1);
        // sign twice (second call uses the refined cache)
        assert_eq!(x.sign(), 1);
    }

    #[test]
    fn sign_does_not_depend_on_cache_state() {
        // two separately built fields, one pre-refined by unrelated queries
        let f1 = Field::sqrt2();
        let f2 = Field::sqrt2();
        let probe = f2.theta().scale(&rat(1000, 1)).sub_ref(&f2.integer(1414));
        let _ = probe.sign();
        for (p, q) in [(3, 2), (7, 5), (17, 12), (41, 29)] {
            let a1 = f1.rational(rat(p, q)).sub_ref(&f1.theta());
            let a2 = f2.rational(rat(p, q)).sub_ref(&f2.theta());
            assert_eq!(a1.sign(), a2.sign());
        }
    }

    #[test]
    fn floor_values() {
        let (f, t) = sqrt2();
        assert_eq!(t.floor(), BigInt::from(1));
        assert_eq!(t.scale(&rat(10, 1)).floor(), BigInt::from(14));
        assert_eq!(t.neg_ref().floor(), BigInt::from(-2));
        assert_eq!(f.rational(rat(7, 2)).floor(), BigInt::from(3));
        assert_eq!(f.rational(rat(-7, 2)).floor(), BigInt::from(-4));
    }

    #[test]
    fn cubic_field() {
        // Q(2^(1/3))
        let f = Field::new(FieldSpec {
            minpoly: vec![BigInt::from(-2), BigInt::zero(), BigInt::zero(), BigInt::one()],
            isolating: (rat(1, 1), rat(2, 1)),
        })
        .unwrap();
        let t = f.theta();
        let t3 = t.mul_ref(&t).mul_ref(&t);
        assert_eq!(t3, f.integer(2));
        // 5/4 < 2^(1/3) < 13/10
        assert_eq!(t.sub_ref(&f.rational(rat(5, 4))).sign(), 1);
        assert_eq!(t.sub_ref(&f.rational(rat(13, 10))).sign(), -1);
        assert_eq!(t.inv().unwrap().mul_ref(&t), f.one());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_num() -> impl Strategy<Value = GroundNum> {
            (-40i64..=40, -40i64..=40, 1i64..=6).prop_map(|(p, q, d)| {
                let f = Field::sqrt2();
                f.rational(rat(p, d)).add_ref(&f.theta().scale(&rat(q, d)))
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn mul_is_associative(a in arb_num(), b in arb_num(), c in arb_num()) {
                prop_assert_eq!(a.mul_ref(&b).mul_ref(&c), a.mul_ref(&b.mul_ref(&c)));
            }

            #[test]
            fn mul_distributes(a in arb_num(), b in arb_num(), c in arb_num()) {
                prop_assert_eq!(
                    a.mul_ref(&b.add_ref(&c)),
                    a.mul_ref(&b).add_ref(&a.mul_ref(&c))
                );
            }

            #[test]
            fn nonzero_elements_invert(a in arb_num()) {
                if !a.is_zero() {
                    prop_assert_eq!(a.mul_ref(&a.inv().unwrap()), a.field().one());
                }
            }

            #[test]
            fn sign_is_antisymmetric_and_multiplicative(a in arb_num(), b in arb_num()) {
                prop_assert_eq!(a.sub_ref(&b).sign(), -b.sub_ref(&a).sign());
                prop_assert_eq!(a.mul_ref(&b).sign(), a.sign() * b.sign());
            }
        }
    }

    #[test]
    fn field_axioms_random() {
        let (f, t) = sqrt2();
        let mut seed = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            seed
        };
        let mut sample = |f: &Field, t: &GroundNum| {
            let a = (next() % 9) as i64 - 4;
            let b = (next() % 9) as i64 - 4;
            let d = (next() % 3) as i64 + 1;
            f.rational(rat(a, d)).add_ref(&t.scale(&rat(b, d)))
        };
        for _ in 0..50 {
            let a = sample(&f, &t);
            let b = sample(&f, &t);
            let c = sample(&f, &t);
            // associativity and distributivity
            assert_eq!(
                a.mul_ref(&b).mul_ref(&c),
                a.mul_ref(&b.mul_ref(&c)),
            );
            assert_eq!(
                a.mul_ref(&b.add_ref(&c)),
                a.mul_ref(&b).add_ref(&a.mul_ref(&c)),
            );
            // inverses
            if !a.is_zero() {
                assert_eq!(a.mul_ref(&a.inv().unwrap()), f.one());
            }
            // sign consistency
            assert_eq!(a.sub_ref(&b).sign(), -b.sub_ref(&a).sign());
            assert_eq!(a.mul_ref(&b).sign(), a.sign() * b.sign());
        }
    }
}
