//! Value groups for the invariants: the second tensor power of the lattice,
//! its skew-symmetric square (with 2-torsion on the diagonal), the exterior
//! square, and the mod-2 quotients.
//!
//! Elements are stored in normal form relative to the lattice basis and carry
//! a reference to the lattice; arithmetic across different lattices is
//! rejected because the meaning of a value depends on the ambient group.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::ground::GroundNum;
use crate::lattice::Lattice;
use crate::{Error, Result};

fn upper_len(d: usize) -> usize {
    d * (d - 1) / 2
}

fn upper_idx(d: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < d);
    i * d - i * (i + 1) / 2 + (j - i - 1)
}

/// Element of the second tensor power, as a d-by-d integer matrix.
#[derive(Clone, PartialEq, Eq)]
pub struct T2 {
    lattice: Lattice,
    m: Vec<BigInt>, // row-major d*d
}

/// Element of the skew-symmetric square: strictly upper triangular integers
/// plus mod-2 diagonal bits (the 2-torsion part).
#[derive(Clone, PartialEq, Eq)]
pub struct SW2 {
    lattice: Lattice,
    upper: Vec<BigInt>,
    diag: Vec<bool>,
}

/// Element of the exterior square (diagonal torsion killed).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Ext2 {
    lattice: Lattice,
    upper: Vec<BigInt>,
}

/// Second tensor power with coefficients reduced mod 2.
#[derive(Clone, PartialEq, Eq)]
pub struct T2Mod2 {
    lattice: Lattice,
    bits: Vec<bool>, // row-major d*d
}

/// Skew-symmetric square with coefficients reduced mod 2.
#[derive(Clone, PartialEq, Eq)]
pub struct SW2Mod2 {
    lattice: Lattice,
    upper: Vec<bool>,
    diag: Vec<bool>,
}

/// `a (x) b` in the second tensor power.
pub fn tensor(lattice: &Lattice, a: &GroundNum, b: &GroundNum) -> Result<T2> {
    let ca = lattice.coordinates_of(a)?;
    let cb = lattice.coordinates_of(b)?;
    let d = lattice.rank();
    let mut m = vec![BigInt::zero(); d * d];
    for i in 0..d {
        if ca[i].is_zero() {
            continue;
        }
        for j in 0..d {
            m[i * d + j] = &ca[i] * &cb[j];
        }
    }
    Ok(T2 {
        lattice: lattice.clone(),
        m,
    })
}

/// `a /\ b`, the projection of `a (x) b` into the skew-symmetric square.
pub fn wedge(lattice: &Lattice, a: &GroundNum, b: &GroundNum) -> Result<SW2> {
    Ok(tensor(lattice, a, b)?.project())
}

impl T2 {
    pub fn zero(lattice: &Lattice) -> T2 {
        let d = lattice.rank();
        T2 {
            lattice: lattice.clone(),
            m: vec![BigInt::zero(); d * d],
        }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn entry(&self, i: usize, j: usize) -> &BigInt {
        &self.m[i * self.lattice.rank() + j]
    }

    pub fn is_zero(&self) -> bool {
        self.m.iter().all(|c| c.is_zero())
    }

    fn same(&self, o: &T2) {
        assert!(self.lattice == o.lattice, "values from different lattices");
    }

    pub fn add(&self, o: &T2) -> T2 {
        self.same(o);
        T2 {
            lattice: self.lattice.clone(),
            m: self.m.iter().zip(&o.m).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn neg(&self) -> T2 {
        T2 {
            lattice: self.lattice.clone(),
            m: self.m.iter().map(|a| -a).collect(),
        }
    }

    pub fn sub(&self, o: &T2) -> T2 {
        self.add(&o.neg())
    }

    pub fn scale(&self, k: i64) -> T2 {
        let k = BigInt::from(k);
        T2 {
            lattice: self.lattice.clone(),
            m: self.m.iter().map(|a| a * &k).collect(),
        }
    }

    /// Normal-form projection into the skew-symmetric square.
    pub fn project(&self) -> SW2 {
        let d = self.lattice.rank();
        let mut upper = vec![BigInt::zero(); upper_len(d)];
        let mut diag = vec![false; d];
        for i in 0..d {
            diag[i] = self.m[i * d + i].is_odd();
            for j in i + 1..d {
                upper[upper_idx(d, i, j)] = &self.m[i * d + j] - &self.m[j * d + i];
            }
        }
        SW2 {
            lattice: self.lattice.clone(),
            upper,
            diag,
        }
    }

    pub fn mod2(&self) -> T2Mod2 {
        T2Mod2 {
            lattice: self.lattice.clone(),
            bits: self.m.iter().map(|c| c.is_odd()).collect(),
        }
    }

    /// Re-express the value after the basis change `c_new = U c_old`.
    pub fn change_basis(&self, u: &[Vec<BigInt>]) -> Result<T2> {
        check_unimodular(&self.lattice, u)?;
        let d = self.lattice.rank();
        let mut out = vec![BigInt::zero(); d * d];
        for i in 0..d {
            for j in 0..d {
                if self.m[i * d + j].is_zero() {
                    continue;
                }
                for p in 0..d {
                    if u[p][i].is_zero() {
                        continue;
                    }
                    for q in 0..d {
                        let add = &u[p][i] * &self.m[i * d + j] * &u[q][j];
                        out[p * d + q] = &out[p * d + q] + add;
                    }
                }
            }
        }
        Ok(T2 {
            lattice: self.lattice.clone(),
            m: out,
        })
    }
}

impl SW2 {
    pub fn zero(lattice: &Lattice) -> SW2 {
        let d = lattice.rank();
        SW2 {
            lattice: lattice.clone(),
            upper: vec![BigInt::zero(); upper_len(d)],
            diag: vec![false; d],
        }
    }

    /// The basis element `e_i /\ e_j` (`i != j`) or the torsion `e_i /\ e_i`.
    pub fn basis_wedge(lattice: &Lattice, i: usize, j: usize) -> SW2 {
        let mut out = SW2::zero(lattice);
        let d = lattice.rank();
        if i == j {
            out.diag[i] = true;
        } else if i < j {
            out.upper[upper_idx(d, i, j)] = BigInt::one();
        } else {
            out.upper[upper_idx(d, j, i)] = -BigInt::one();
        }
        out
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn upper(&self, i: usize, j: usize) -> BigInt {
        let d = self.lattice.rank();
        if i < j {
            self.upper[upper_idx(d, i, j)].clone()
        } else if j < i {
            -self.upper[upper_idx(d, j, i)].clone()
        } else {
            BigInt::zero()
        }
    }

    pub fn diag(&self) -> &[bool] {
        &self.diag
    }

    pub fn is_zero(&self) -> bool {
        self.upper.iter().all(|c| c.is_zero()) && self.diag.iter().all(|b| !b)
    }

    /// Is the value of the form `2w`?  (All upper entries even, no torsion.)
    pub fn is_twice(&self) -> bool {
        self.upper.iter().all(|c| c.is_even()) && self.diag.iter().all(|b| !b)
    }

    fn same(&self, o: &SW2) {
        assert!(self.lattice == o.lattice, "values from different lattices");
    }

    pub fn add(&self, o: &SW2) -> SW2 {
        self.same(o);
        SW2 {
            lattice: self.lattice.clone(),
            upper: self.upper.iter().zip(&o.upper).map(|(a, b)| a + b).collect(),
            diag: self.diag.iter().zip(&o.diag).map(|(a, b)| a ^ b).collect(),
        }
    }

    pub fn neg(&self) -> SW2 {
        SW2 {
            lattice: self.lattice.clone(),
            upper: self.upper.iter().map(|a| -a).collect(),
            diag: self.diag.clone(), // diagonal is 2-torsion
        }
    }

    pub fn sub(&self, o: &SW2) -> SW2 {
        self.add(&o.neg())
    }

    pub fn scale(&self, k: i64) -> SW2 {
        let kb = BigInt::from(k);
        SW2 {
            lattice: self.lattice.clone(),
            upper: self.upper.iter().map(|a| a * &kb).collect(),
            diag: if k % 2 == 0 {
                vec![false; self.diag.len()]
            } else {
                self.diag.clone()
            },
        }
    }

    /// Kill the diagonal torsion.
    pub fn to_exterior(&self) -> Ext2 {
        Ext2 {
            lattice: self.lattice.clone(),
            upper: self.upper.clone(),
        }
    }

    pub fn mod2(&self) -> SW2Mod2 {
        SW2Mod2 {
            lattice: self.lattice.clone(),
            upper: self.upper.iter().map(|c| c.is_odd()).collect(),
            diag: self.diag.clone(),
        }
    }

    pub fn change_basis(&self, u: &[Vec<BigInt>]) -> Result<SW2> {
        // lift to a tensor representative; the relation lattice is preserved
        // by any basis change, so the projection is independent of the lift
        let d = self.lattice.rank();
        let mut m = vec![BigInt::zero(); d * d];
        for i in 0..d {
            if self.diag[i] {
                m[i * d + i] = BigInt::one();
            }
            for j in i + 1..d {
                m[i * d + j] = self.upper[upper_idx(d, i, j)].clone();
            }
        }
        let t = T2 {
            lattice: self.lattice.clone(),
            m,
        };
        Ok(t.change_basis(u)?.project())
    }
}

impl Ext2 {
    pub fn is_zero(&self) -> bool {
        self.upper.iter().all(|c| c.is_zero())
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }
}

impl T2Mod2 {
    pub fn zero(lattice: &Lattice) -> T2Mod2 {
        let d = lattice.rank();
        T2Mod2 {
            lattice: lattice.clone(),
            bits: vec![false; d * d],
        }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn is_zero(&self) -> bool {
        self.bits.iter().all(|b| !b)
    }

    pub fn add(&self, o: &T2Mod2) -> T2Mod2 {
        assert!(self.lattice == o.lattice, "values from different lattices");
        T2Mod2 {
            lattice: self.lattice.clone(),
            bits: self.bits.iter().zip(&o.bits).map(|(a, b)| a ^ b).collect(),
        }
    }
}

impl SW2Mod2 {
    pub fn zero(lattice: &Lattice) -> SW2Mod2 {
        let d = lattice.rank();
        SW2Mod2 {
            lattice: lattice.clone(),
            upper: vec![false; upper_len(d)],
            diag: vec![false; d],
        }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn is_zero(&self) -> bool {
        self.upper.iter().all(|b| !b) && self.diag.iter().all(|b| !b)
    }

    pub fn diag(&self) -> &[bool] {
        &self.diag
    }

    pub fn add(&self, o: &SW2Mod2) -> SW2Mod2 {
        assert!(self.lattice == o.lattice, "values from different lattices");
        SW2Mod2 {
            lattice: self.lattice.clone(),
            upper: self.upper.iter().zip(&o.upper).map(|(a, b)| a ^ b).collect(),
            diag: self.diag.iter().zip(&o.diag).map(|(a, b)| a ^ b).collect(),
        }
    }

    pub fn bits(&self) -> Vec<bool> {
        let mut v = self.upper.clone();
        v.extend_from_slice(&self.diag);
        v
    }
}

/// F2 bit-vector view, for span computations.
pub trait F2Bits {
    fn lattice(&self) -> &Lattice;
    fn f2_bits(&self) -> Vec<bool>;
}

impl F2Bits for T2Mod2 {
    fn lattice(&self) -> &Lattice {
        &self.lattice
    }
    fn f2_bits(&self) -> Vec<bool> {
        self.bits.clone()
    }
}

impl F2Bits for SW2Mod2 {
    fn lattice(&self) -> &Lattice {
        &self.lattice
    }
    fn f2_bits(&self) -> Vec<bool> {
        self.bits()
    }
}

impl F2Bits for (T2Mod2, SW2Mod2) {
    fn lattice(&self) -> &Lattice {
        &self.0.lattice
    }
    fn f2_bits(&self) -> Vec<bool> {
        let mut v = self.0.bits.clone();
        v.extend(self.1.bits());
        v
    }
}

/// Dimension of the F2 span of the given vectors.
pub fn f2_span_dim<T: F2Bits>(vectors: &[T]) -> Result<usize> {
    if vectors.is_empty() {
        return Ok(0);
    }
    let l = vectors[0].lattice();
    let mut rows: Vec<Vec<bool>> = Vec::new();
    for v in vectors {
        if v.lattice() != l {
            return Err(Error::MixedContexts);
        }
        rows.push(v.f2_bits());
    }
    let ncols = rows[0].len();
    let mut rank = 0;
    for col in 0..ncols {
        let Some(p) = (rank..rows.len()).find(|&r| rows[r][col]) else {
            continue;
        };
        rows.swap(rank, p);
        for r in 0..rows.len() {
            if r != rank && rows[r][col] {
                for c in col..ncols {
                    rows[r][c] ^= rows[rank][c];
                }
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    Ok(rank)
}

fn check_unimodular(lattice: &Lattice, u: &[Vec<BigInt>]) -> Result<()> {
    let d = lattice.rank();
    if u.len() != d || u.iter().any(|row| row.len() != d) {
        return Err(Error::NotUnimodular);
    }
    let det = int_det(u);
    if det.abs() != BigInt::one() {
        return Err(Error::NotUnimodular);
    }
    Ok(())
}

fn int_det(u: &[Vec<BigInt>]) -> BigInt {
    // rational Gaussian elimination; exact
    let d = u.len();
    let mut m: Vec<Vec<BigRational>> = u
        .iter()
        .map(|row| row.iter().map(|c| BigRational::from(c.clone())).collect())
        .collect();
    let mut det = BigRational::one();
    for col in 0..d {
        let Some(p) = (col..d).find(|&r| !m[r][col].is_zero()) else {
            return BigInt::zero();
        };
        if p != col {
            m.swap(col, p);
            det = -det;
        }
        det = det * m[col][col].clone();
        let inv = BigRational::one() / m[col][col].clone();
        for r in col + 1..d {
            if !m[r][col].is_zero() {
                let factor = &m[r][col] * &inv;
                for c in col..d {
                    let sub = &factor * &m[col][c];
                    m[r][c] = &m[r][c] - sub;
                }
            }
        }
    }
    det.to_integer()
}

// ---------------------------------------------------------------------------
// rendering

fn fmt_terms(
    f: &mut fmt::Formatter<'_>,
    terms: &[(String, BigInt)],
    torsion: &[String],
    suffix: &str,
) -> fmt::Result {
    let mut parts: Vec<String> = Vec::new();
    for (name, c) in terms {
        if c.is_zero() {
            continue;
        }
        if c.is_one() {
            parts.push(name.clone());
        } else if *c == -BigInt::one() {
            parts.push(format!("-{name}"));
        } else {
            parts.push(format!("{c}·({name})"));
        }
    }
    for name in torsion {
        parts.push(name.clone());
    }
    if parts.is_empty() {
        write!(f, "0")?;
    } else {
        write!(f, "{}", parts.join(" + "))?;
    }
    if !suffix.is_empty() && !parts.is_empty() {
        write!(f, " {suffix}")?;
    }
    Ok(())
}

impl fmt::Display for T2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = self.lattice.rank();
        let mut terms = Vec::new();
        for i in 0..d {
            for j in 0..d {
                terms.push((format!("e{}⊗e{}", i + 1, j + 1), self.m[i * d + j].clone()));
            }
        }
        fmt_terms(f, &terms, &[], "")
    }
}

impl fmt::Display for SW2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = self.lattice.rank();
        let mut terms = Vec::new();
        for i in 0..d {
            for j in i + 1..d {
                terms.push((
                    format!("e{}∧e{}", i + 1, j + 1),
                    self.upper[upper_idx(d, i, j)].clone(),
                ));
            }
        }
        let torsion: Vec<String> = (0..d)
            .filter(|&i| self.diag[i])
            .map(|i| format!("e{}∧e{}", i + 1, i + 1))
            .collect();
        let has_torsion = !torsion.is_empty();
        fmt_terms(f, &terms, &torsion, if has_torsion { "(torsion)" } else { "" })
    }
}

impl fmt::Display for T2Mod2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = self.lattice.rank();
        let mut terms = Vec::new();
        for i in 0..d {
            for j in 0..d {
                let c = if self.bits[i * d + j] {
                    BigInt::one()
                } else {
                    BigInt::zero()
                };
                terms.push((format!("e{}⊗e{}", i + 1, j + 1), c));
            }
        }
        fmt_terms(f, &terms, &[], "[mod 2]")
    }
}

impl fmt::Display for SW2Mod2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = self.lattice.rank();
        let mut terms = Vec::new();
        for i in 0..d {
            for j in i + 1..d {
                let c = if self.upper[upper_idx(d, i, j)] {
                    BigInt::one()
                } else {
                    BigInt::zero()
                };
                terms.push((format!("e{}∧e{}", i + 1, j + 1), c));
            }
        }
        let torsion: Vec<String> = (0..d)
            .filter(|&i| self.diag[i])
            .map(|i| format!("e{}∧e{}", i + 1, i + 1))
            .collect();
        fmt_terms(f, &terms, &torsion, "[mod 2]")
    }
}

impl fmt::Debug for T2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T2({self})")
    }
}

impl fmt::Debug for SW2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SW2({self})")
    }
}

impl fmt::Debug for T2Mod2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T2Mod2({self})")
    }
}

impl fmt::Debug for SW2Mod2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SW2Mod2({self})")
    }
}
