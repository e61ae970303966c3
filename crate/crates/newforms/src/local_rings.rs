//! Exact arithmetic in truncations of the ring of integers of a
//! non-archimedean local field, together with its unramified quadratic
//! extension.
//!
//! Two backends share one element representation:
//! * `Mixed`: the Witt-vector side, `O = Z_p` with residue field `F_p`
//!   (so `f = 1` is forced), truncated to `Z/p^N`;
//! * `EqualChar`: `O = F_q[[t]]` truncated to `F_q[t]/t^N`.
//!
//! An element is a canonical base-uniformizer digit vector. The digit count
//! is the precision of the element; arithmetic never increases precision and
//! only inversion decreases it.

use crate::error::{Error, Result};
use serde::Serialize;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Backend {
    Mixed,
    EqualChar,
}

/// The residue field `F_q`, `q = p^f`. Elements are encoded as integers in
/// `[0, q)` whose base-`p` digits are the coefficients of a polynomial in a
/// fixed generator; for `f = 1` this is plain arithmetic mod `p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidueField {
    pub p: u64,
    pub f: u32,
    pub q: u64,
    /// Coefficients of the minimal polynomial of the generator: the
    /// lexicographically least monic irreducible of degree `f` over `F_p`.
    /// Empty when `f = 1`.
    min_poly: Vec<u64>,
    mul_table: Vec<u64>,
    inv_table: Vec<u64>,
}

fn poly_is_irreducible(coeffs: &[u64], p: u64) -> bool {
    // coeffs: c_0 .. c_{d-1} of a monic polynomial of degree d over F_p.
    // Degree here is at most 4, so trial division by all monic polynomials
    // of degree up to d/2 is cheap.
    let d = coeffs.len();
    for dd in 1..=d / 2 {
        // enumerate monic divisor candidates of degree dd
        let mut idx = vec![0u64; dd];
        loop {
            // long-divide x^d + coeffs by divisor x^dd + idx
            let mut rem: Vec<u64> = coeffs.to_vec();
            rem.push(1); // leading coefficient
            for k in (dd..=d).rev() {
                let lead = rem[k] % p;
                if lead != 0 {
                    rem[k] = 0;
                    for (j, &c) in idx.iter().enumerate() {
                        let pos = k - dd + j;
                        rem[pos] = (rem[pos] + p * p - (lead * c) % p) % p;
                    }
                }
            }
            if rem.iter().take(dd).all(|&c| c == 0) {
                return false;
            }
            // next candidate
            let mut carry = true;
            for v in idx.iter_mut() {
                if carry {
                    *v += 1;
                    if *v == p {
                        *v = 0;
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

impl ResidueField {
    pub fn new(p: u64, f: u32) -> Result<ResidueField> {
        if p < 3 || f == 0 {
            return Err(Error::BadRing(format!("residue field F_{{{p}^{f}}}")));
        }
        let q = p.pow(f);
        let min_poly = if f == 1 {
            Vec::new()
        } else {
            let d = f as usize;
            let mut found = None;
            let mut coeffs = vec![0u64; d];
            'outer: loop {
                if poly_is_irreducible(&coeffs, p) {
                    found = Some(coeffs.clone());
                    break;
                }
                let mut carry = true;
                for v in coeffs.iter_mut() {
                    if carry {
                        *v += 1;
                        if *v == p {
                            *v = 0;
                        } else {
                            carry = false;
                        }
                    }
                }
                if carry {
                    break 'outer;
                }
            }
            found.ok_or_else(|| Error::Internal("no irreducible polynomial found".into()))?
        };
        let mut rf = ResidueField {
            p,
            f,
            q,
            min_poly,
            mul_table: Vec::new(),
            inv_table: Vec::new(),
        };
        let mut mul = vec![0u64; (q * q) as usize];
        for a in 0..q {
            for b in 0..q {
                mul[(a * q + b) as usize] = rf.mul_raw(a, b);
            }
        }
        rf.mul_table = mul;
        let mut inv = vec![0u64; q as usize];
        for a in 1..q {
            for b in 1..q {
                if rf.mul_table[(a * q + b) as usize] == 1 {
                    inv[a as usize] = b;
                    break;
                }
            }
        }
        rf.inv_table = inv;
        Ok(rf)
    }

    fn digits(&self, x: u64) -> Vec<u64> {
        let mut d = vec![0u64; self.f as usize];
        let mut x = x;
        for v in d.iter_mut() {
            *v = x % self.p;
            x /= self.p;
        }
        d
    }

    fn from_digits(&self, d: &[u64]) -> u64 {
        let mut x = 0u64;
        for &c in d.iter().rev() {
            x = x * self.p + c % self.p;
        }
        x
    }

    pub fn add(&self, a: u64, b: u64) -> u64 {
        if self.f == 1 {
            (a + b) % self.p
        } else {
            let da = self.digits(a);
            let db = self.digits(b);
            let sum: Vec<u64> = da.iter().zip(&db).map(|(x, y)| (x + y) % self.p).collect();
            self.from_digits(&sum)
        }
    }

    pub fn neg(&self, a: u64) -> u64 {
        if self.f == 1 {
            (self.p - a % self.p) % self.p
        } else {
            let d: Vec<u64> = self
                .digits(a)
                .iter()
                .map(|&x| (self.p - x) % self.p)
                .collect();
            self.from_digits(&d)
        }
    }

    pub fn sub(&self, a: u64, b: u64) -> u64 {
        self.add(a, self.neg(b))
    }

    fn mul_raw(&self, a: u64, b: u64) -> u64 {
        if self.f == 1 {
            return (a * b) % self.p;
        }
        let da = self.digits(a);
        let db = self.digits(b);
        let d = self.f as usize;
        let mut prod = vec![0u64; 2 * d - 1];
        for (i, &x) in da.iter().enumerate() {
            for (j, &y) in db.iter().enumerate() {
                prod[i + j] = (prod[i + j] + x * y) % self.p;
            }
        }
        // reduce by x^d = -min_poly
        for k in (d..2 * d - 1).rev() {
            let lead = prod[k];
            if lead != 0 {
                prod[k] = 0;
                for (j, &c) in self.min_poly.iter().enumerate() {
                    let pos = k - d + j;
                    prod[pos] = (prod[pos] + p_sub(self.p, (lead * c) % self.p)) % self.p;
                }
            }
        }
        self.from_digits(&prod[..d])
    }

    pub fn mul(&self, a: u64, b: u64) -> u64 {
        if self.mul_table.is_empty() {
            self.mul_raw(a, b)
        } else {
            self.mul_table[(a * self.q + b) as usize]
        }
    }

    pub fn inv(&self, a: u64) -> Result<u64> {
        if a == 0 {
            return Err(Error::NotInvertible("zero in residue field".into()));
        }
        Ok(self.inv_table[a as usize])
    }

    pub fn is_square(&self, a: u64) -> bool {
        if a == 0 {
            return true;
        }
        (0..self.q).any(|b| self.mul(b, b) == a)
    }

    /// Trace down to the prime field `F_p`, via the Frobenius orbit sum.
    pub fn trace_to_prime(&self, a: u64) -> u64 {
        if self.f == 1 {
            return a % self.p;
        }
        let mut acc = 0u64;
        let mut x = a;
        for _ in 0..self.f {
            acc = self.add(acc, x);
            // Frobenius: x -> x^p
            let mut y = 1u64;
            for _ in 0..self.p {
                y = self.mul(y, x);
            }
            x = y;
        }
        // acc lies in the prime field: its encoding equals its digit 0
        acc % self.p
    }
}

fn p_sub(p: u64, x: u64) -> u64 {
    (p - x % p) % p
}

/// A truncation `O / P^N` of the integers of a local field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RingSpec {
    pub backend: Backend,
    pub p: u64,
    pub f: u32,
    pub q: u64,
    /// Truncation length: the number of base-uniformizer digits carried.
    pub prec: usize,
    pub res: ResidueField,
}

/// Canonical digit-vector element of a `RingSpec` truncation. `digits.len()`
/// is the precision of this particular value; a shorter vector means the
/// value is only known modulo a smaller power of the maximal ideal.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RElem {
    pub digits: Vec<u64>,
}

impl fmt::Debug for RElem {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(fm, "RElem{:?}", self.digits)
    }
}

pub fn make_ring(backend: Backend, p: u64, f: u32, n: usize) -> Result<RingSpec> {
    if p < 3 {
        return Err(Error::BadRing(format!("residual characteristic {p} < 3")));
    }
    if n == 0 {
        return Err(Error::BadRing("zero precision".into()));
    }
    if backend == Backend::Mixed && f != 1 {
        return Err(Error::BadRing(
            "mixed-characteristic backend forces f = 1".into(),
        ));
    }
    // keep q^prec within u64 headroom for encodings downstream
    let q = p.pow(f);
    let mut pw: u128 = 1;
    for _ in 0..n {
        pw *= q as u128;
        if pw > u64::MAX as u128 / (q as u128) {
            return Err(Error::BadRing(format!("q^{n} exceeds encoding range")));
        }
    }
    Ok(RingSpec {
        backend,
        p,
        f,
        q,
        prec: n,
        res: ResidueField::new(p, f)?,
    })
}

impl RingSpec {
    pub fn zero(&self) -> RElem {
        RElem {
            digits: vec![0; self.prec],
        }
    }

    pub fn one(&self) -> RElem {
        self.from_residue(1)
    }

    pub fn from_residue(&self, r: u64) -> RElem {
        let mut d = vec![0; self.prec];
        d[0] = r % self.q;
        RElem { digits: d }
    }

    /// The integer `x` as a ring element (full precision). Only meaningful
    /// reduction for the mixed backend; in equal characteristic the value is
    /// the constant `x mod p`.
    pub fn from_u64(&self, x: u64) -> RElem {
        match self.backend {
            Backend::Mixed => {
                let mut d = vec![0; self.prec];
                let mut x = x;
                for v in d.iter_mut() {
                    *v = x % self.p;
                    x /= self.p;
                }
                RElem { digits: d }
            }
            Backend::EqualChar => self.from_residue(x % self.p),
        }
    }

    pub fn uniformizer(&self) -> RElem {
        let mut d = vec![0; self.prec];
        if self.prec > 1 {
            d[1] = 1;
        }
        RElem { digits: d }
    }

    /// Integer value of a mixed-characteristic element.
    pub fn to_u64(&self, x: &RElem) -> u64 {
        debug_assert_eq!(self.backend, Backend::Mixed);
        let mut acc = 0u64;
        for &c in x.digits.iter().rev() {
            acc = acc * self.p + c;
        }
        acc
    }

    fn mixed_from_u64(&self, x: u64, prec: usize) -> RElem {
        let mut d = vec![0; prec];
        let mut x = x;
        for v in d.iter_mut() {
            *v = x % self.p;
            x /= self.p;
        }
        RElem { digits: d }
    }

    pub fn add(&self, a: &RElem, b: &RElem) -> RElem {
        let prec = a.digits.len().min(b.digits.len());
        match self.backend {
            Backend::Mixed => {
                let m = self.p.pow(prec as u32);
                self.mixed_from_u64((self.to_prec_u64(a, prec) + self.to_prec_u64(b, prec)) % m, prec)
            }
            Backend::EqualChar => RElem {
                digits: (0..prec)
                    .map(|i| self.res.add(a.digits[i], b.digits[i]))
                    .collect(),
            },
        }
    }

    fn to_prec_u64(&self, x: &RElem, prec: usize) -> u64 {
        let mut acc = 0u64;
        for &c in x.digits.iter().take(prec).rev() {
            acc = acc * self.p + c;
        }
        acc
    }

    pub fn neg(&self, a: &RElem) -> RElem {
        let prec = a.digits.len();
        match self.backend {
            Backend::Mixed => {
                let m = self.p.pow(prec as u32);
                self.mixed_from_u64((m - self.to_prec_u64(a, prec) % m) % m, prec)
            }
            Backend::EqualChar => RElem {
                digits: a.digits.iter().map(|&c| self.res.neg(c)).collect(),
            },
        }
    }

    pub fn sub(&self, a: &RElem, b: &RElem) -> RElem {
        self.add(a, &self.neg(b))
    }

    pub fn mul(&self, a: &RElem, b: &RElem) -> RElem {
        let prec = a.digits.len().min(b.digits.len());
        match self.backend {
            Backend::Mixed => {
                let m = self.p.pow(prec as u32) as u128;
                let x = self.to_prec_u64(a, prec) as u128 * self.to_prec_u64(b, prec) as u128 % m;
                self.mixed_from_u64(x as u64, prec)
            }
            Backend::EqualChar => {
                let mut d = vec![0u64; prec];
                for i in 0..prec {
                    for j in 0..prec - i {
                        if a.digits[i] != 0 && b.digits[j] != 0 {
                            d[i + j] = self
                                .res
                                .add(d[i + j], self.res.mul(a.digits[i], b.digits[j]));
                        }
                    }
                }
                RElem { digits: d }
            }
        }
    }

    /// Index of the first non-zero digit; equals the element's precision when
    /// every carried digit vanishes ("zero at this precision").
    pub fn valuation(&self, a: &RElem) -> usize {
        a.digits
            .iter()
            .position(|&c| c != 0)
            .unwrap_or(a.digits.len())
    }

    pub fn is_unit(&self, a: &RElem) -> bool {
        !a.digits.is_empty() && a.digits[0] != 0
    }

    /// Inverse of an element of valuation `v`, interpreted as the inverse of
    /// the unit part divided by the uniformizer power: here only units are
    /// invertible; precision drops by `v` for the shifted callers.
    pub fn invert_unit(&self, a: &RElem) -> Result<RElem> {
        if !self.is_unit(a) {
            return Err(Error::NotInvertible(format!("{a:?}")));
        }
        let prec = a.digits.len();
        match self.backend {
            Backend::Mixed => {
                let m = self.p.pow(prec as u32);
                let x = self.to_prec_u64(a, prec);
                // extended euclid mod p^prec
                let (mut r0, mut r1) = (m as i128, x as i128);
                let (mut s0, mut s1) = (0i128, 1i128);
                while r1 != 0 {
                    let qd = r0 / r1;
                    let r2 = r0 - qd * r1;
                    let s2 = s0 - qd * s1;
                    r0 = r1;
                    r1 = r2;
                    s0 = s1;
                    s1 = s2;
                }
                let inv = ((s0 % m as i128) + m as i128) as u64 % m;
                Ok(self.mixed_from_u64(inv, prec))
            }
            Backend::EqualChar => {
                let mut d = vec![0u64; prec];
                d[0] = self.res.inv(a.digits[0])?;
                for k in 1..prec {
                    // digit k of a * inv must vanish
                    let mut acc = 0u64;
                    for j in 0..k {
                        acc = self.res.add(acc, self.res.mul(a.digits[k - j], d[j]));
                    }
                    d[k] = self.res.mul(self.res.neg(acc), d[0]);
                }
                Ok(RElem { digits: d })
            }
        }
    }

    /// Divide by the uniformizer `v` times (requires valuation at least `v`);
    /// the result carries `v` fewer digits.
    pub fn shift_down(&self, a: &RElem, v: usize) -> Result<RElem> {
        if self.valuation(a) < v {
            return Err(Error::Precision(format!(
                "shift_down by {v} on valuation {}",
                self.valuation(a)
            )));
        }
        Ok(RElem {
            digits: a.digits[v..].to_vec(),
        })
    }

    pub fn shift_up(&self, a: &RElem, v: usize) -> RElem {
        let mut d = vec![0u64; v];
        d.extend_from_slice(&a.digits);
        d.truncate(self.prec);
        RElem { digits: d }
    }

    pub fn truncate(&self, a: &RElem, prec: usize) -> RElem {
        RElem {
            digits: a.digits.iter().take(prec).copied().collect(),
        }
    }

    /// Squareness of a unit: decided on the residue (valid since `p` is odd
    /// and the extension of residue fields is separable).
    pub fn is_square_unit(&self, a: &RElem) -> Result<bool> {
        if !self.is_unit(a) {
            return Err(Error::Incompatible("not a unit".into()));
        }
        Ok(self.res.is_square(a.digits[0]))
    }

    /// The canonical non-square unit: the constant lift of the least
    /// non-square residue.
    pub fn eps(&self) -> RElem {
        let r = (1..self.q)
            .find(|&r| !self.res.is_square(r))
            .expect("odd residue field has a non-square");
        self.from_residue(r)
    }

    /// Enumerate all element encodings at precision `prec` in canonical
    /// digit order (digit 0 fastest).
    pub fn enumerate(&self, prec: usize) -> Vec<RElem> {
        let mut out = Vec::new();
        let total = (self.q as u128).pow(prec as u32) as u64;
        for mut x in 0..total {
            let mut d = vec![0u64; prec];
            for v in d.iter_mut() {
                *v = x % self.q;
                x /= self.q;
            }
            out.push(RElem { digits: d });
        }
        out
    }
}

/// The unramified quadratic extension `O_E = O[sqrt(eps)]`, elements stored
/// as pairs `a + b sqrt(eps)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct QuadElem {
    pub a: RElem,
    pub b: RElem,
}

impl fmt::Debug for QuadElem {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(fm, "Quad({:?} + {:?}w)", self.a, self.b)
    }
}

#[derive(Debug, Clone)]
pub struct QuadExtSpec {
    pub base: RingSpec,
    pub eps_f: RElem,
    pub eps_e: QuadElem,
}

pub fn make_quad_ext(base: &RingSpec) -> Result<QuadExtSpec> {
    let eps_f = base.eps();
    let eps0 = eps_f.digits[0];
    let rf = &base.res;
    // Residue solution of a^2 - eps b^2 = eps, least in (a, b) encoding order.
    let mut start = None;
    'search: for a0 in 0..rf.q {
        for b0 in 0..rf.q {
            let lhs = rf.sub(rf.mul(a0, a0), rf.mul(eps0, rf.mul(b0, b0)));
            if lhs == eps0 {
                start = Some((a0, b0));
                break 'search;
            }
        }
    }
    let (a0, b0) =
        start.ok_or_else(|| Error::Internal("norm equation unsolvable on residue".into()))?;
    let mut ext = QuadExtSpec {
        base: base.clone(),
        eps_f: eps_f.clone(),
        eps_e: QuadElem {
            a: base.from_residue(a0),
            b: base.from_residue(b0),
        },
    };
    // Hensel-lift digit by digit, choosing the least correction each step.
    for k in 1..base.prec {
        let nm = ext.norm(&ext.eps_e);
        let diff = base.sub(&eps_f, &nm);
        if base.valuation(&diff) >= base.prec {
            break;
        }
        if base.valuation(&diff) < k {
            return Err(Error::Internal("norm lift lost a digit".into()));
        }
        let r = base.shift_down(&diff, k)?.digits[0];
        // Solve 2(a0*ya - eps*b0*yb) = r over the residue field, least (ya, yb).
        let two = rf.add(1, 1);
        let mut best = None;
        'lift: for ya in 0..rf.q {
            for yb in 0..rf.q {
                let lhs = rf.mul(
                    two,
                    rf.sub(rf.mul(a0, ya), rf.mul(eps0, rf.mul(b0, yb))),
                );
                if lhs == r {
                    best = Some((ya, yb));
                    break 'lift;
                }
            }
        }
        let (ya, yb) = best.ok_or_else(|| Error::Internal("norm lift step unsolvable".into()))?;
        let step = QuadElem {
            a: base.shift_up(&base.from_residue(ya), k),
            b: base.shift_up(&base.from_residue(yb), k),
        };
        ext.eps_e = ext.add(&ext.eps_e, &step);
    }
    let nm = ext.norm(&ext.eps_e);
    if nm != eps_f {
        return Err(Error::Internal("norm equation not satisfied after lift".into()));
    }
    Ok(ext)
}

impl QuadExtSpec {
    pub fn zero(&self) -> QuadElem {
        QuadElem {
            a: self.base.zero(),
            b: self.base.zero(),
        }
    }

    pub fn one(&self) -> QuadElem {
        QuadElem {
            a: self.base.one(),
            b: self.base.zero(),
        }
    }

    pub fn embed(&self, x: &RElem) -> QuadElem {
        QuadElem {
            a: x.clone(),
            b: self.base.zero(),
        }
    }

    pub fn sqrt_eps(&self) -> QuadElem {
        QuadElem {
            a: self.base.zero(),
            b: self.base.one(),
        }
    }

    pub fn add(&self, x: &QuadElem, y: &QuadElem) -> QuadElem {
        QuadElem {
            a: self.base.add(&x.a, &y.a),
            b: self.base.add(&x.b, &y.b),
        }
    }

    pub fn sub(&self, x: &QuadElem, y: &QuadElem) -> QuadElem {
        QuadElem {
            a: self.base.sub(&x.a, &y.a),
            b: self.base.sub(&x.b, &y.b),
        }
    }

    pub fn neg(&self, x: &QuadElem) -> QuadElem {
        QuadElem {
            a: self.base.neg(&x.a),
            b: self.base.neg(&x.b),
        }
    }

    pub fn mul(&self, x: &QuadElem, y: &QuadElem) -> QuadElem {
        let r = &self.base;
        let aa = r.mul(&x.a, &y.a);
        let bb = r.mul(&x.b, &y.b);
        let cross = r.add(&r.mul(&x.a, &y.b), &r.mul(&x.b, &y.a));
        QuadElem {
            a: r.add(&aa, &r.mul(&self.eps_f, &bb)),
            b: cross,
        }
    }

    /// Galois conjugate `a - b sqrt(eps)` (the Frobenius of `E/F`).
    pub fn conj(&self, x: &QuadElem) -> QuadElem {
        QuadElem {
            a: x.a.clone(),
            b: self.base.neg(&x.b),
        }
    }

    /// `N_{E/F}(x) = a^2 - eps b^2`.
    pub fn norm(&self, x: &QuadElem) -> RElem {
        let r = &self.base;
        r.sub(&r.mul(&x.a, &x.a), &r.mul(&self.eps_f, &r.mul(&x.b, &x.b)))
    }

    /// `Tr_{E/F}(x) = 2a`.
    pub fn trace(&self, x: &QuadElem) -> RElem {
        self.base.add(&x.a, &x.a)
    }

    pub fn valuation(&self, x: &QuadElem) -> usize {
        self.base.valuation(&x.a).min(self.base.valuation(&x.b))
    }

    pub fn is_unit(&self, x: &QuadElem) -> bool {
        self.valuation(x) == 0
    }

    pub fn invert_unit(&self, x: &QuadElem) -> Result<QuadElem> {
        let nm = self.norm(x);
        let ninv = self.base.invert_unit(&nm)?;
        let cj = self.conj(x);
        Ok(QuadElem {
            a: self.base.mul(&cj.a, &ninv),
            b: self.base.mul(&cj.b, &ninv),
        })
    }

    pub fn truncate(&self, x: &QuadElem, prec: usize) -> QuadElem {
        QuadElem {
            a: self.base.truncate(&x.a, prec),
            b: self.base.truncate(&x.b, prec),
        }
    }

    /// Squareness of a unit of `O_E`, decided on the residue field `F_{q^2}`
    /// by exhausting residue squares.
    pub fn is_square_unit(&self, x: &QuadElem) -> Result<bool> {
        if !self.is_unit(x) {
            return Err(Error::Incompatible("not a unit".into()));
        }
        let rf = &self.base.res;
        let (xa, xb) = (x.a.digits[0], x.b.digits[0]);
        let e0 = self.eps_f.digits[0];
        for a in 0..rf.q {
            for b in 0..rf.q {
                // (a + b w)^2 = a^2 + e b^2 + 2ab w
                let sa = rf.add(rf.mul(a, a), rf.mul(e0, rf.mul(b, b)));
                let sb = rf.mul(rf.add(1, 1), rf.mul(a, b));
                if sa == xa && sb == xb {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rings() -> Vec<RingSpec> {
        vec![
            make_ring(Backend::Mixed, 3, 1, 6).unwrap(),
            make_ring(Backend::Mixed, 5, 1, 6).unwrap(),
            make_ring(Backend::EqualChar, 3, 1, 6).unwrap(),
            make_ring(Backend::EqualChar, 3, 2, 4).unwrap(),
            make_ring(Backend::EqualChar, 5, 1, 5).unwrap(),
        ]
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(make_ring(Backend::Mixed, 2, 1, 4).is_err());
        assert!(make_ring(Backend::Mixed, 3, 2, 4).is_err());
        assert!(make_ring(Backend::EqualChar, 3, 1, 0).is_err());
    }

    #[test]
    fn ring_axioms_on_samples() {
        for ring in rings() {
            let mut seed = 0x9e3779b97f4a7c15u64;
            let mut next = || {
                seed ^= seed << 13;
                seed ^= seed >> 7;
                seed ^= seed << 17;
                seed
            };
            let rand_elem = |s: u64| {
                let mut d = vec![0u64; ring.prec];
                let mut s = s;
                for v in d.iter_mut() {
                    *v = s % ring.q;
                    s /= ring.q.max(2);
                }
                RElem { digits: d }
            };
            for _ in 0..2000 {
                let a = rand_elem(next());
                let b = rand_elem(next());
                let c = rand_elem(next());
                assert_eq!(ring.add(&a, &b), ring.add(&b, &a));
                assert_eq!(ring.mul(&a, &b), ring.mul(&b, &a));
                assert_eq!(
                    ring.mul(&a, &ring.add(&b, &c)),
                    ring.add(&ring.mul(&a, &b), &ring.mul(&a, &c))
                );
                assert_eq!(
                    ring.mul(&ring.mul(&a, &b), &c),
                    ring.mul(&a, &ring.mul(&b, &c))
                );
                assert_eq!(ring.add(&a, &ring.neg(&a)), ring.zero());
                if ring.is_unit(&a) {
                    let inv = ring.invert_unit(&a).unwrap();
                    assert_eq!(ring.mul(&a, &inv), ring.one());
                }
            }
        }
    }

    #[test]
    fn valuation_is_multiplicative_below_cap() {
        for ring in rings() {
            let pi = ring.uniformizer();
            let u = ring.add(&ring.one(), &pi);
            let x = ring.mul(&ring.shift_up(&u, 2), &ring.one());
            assert_eq!(ring.valuation(&x), 2);
            let y = ring.shift_up(&ring.one(), 3);
            assert_eq!(ring.valuation(&ring.mul(&x, &y)), 5.min(ring.prec));
            assert_eq!(ring.valuation(&ring.zero()), ring.prec);
        }
    }

    #[test]
    fn unit_square_classes_have_index_two() {
        for ring in rings() {
            let units: Vec<RElem> = ring
                .enumerate(1)
                .into_iter()
                .filter(|x| ring.is_unit(x))
                .collect();
            let squares = units
                .iter()
                .filter(|u| ring.is_square_unit(&RElem { digits: u.digits.clone() }).unwrap())
                .count();
            assert_eq!(units.len(), 2 * squares);
        }
    }

    #[test]
    fn canonical_epsilon_mixed_q3() {
        let ring = make_ring(Backend::Mixed, 3, 1, 6).unwrap();
        assert_eq!(ring.eps().digits[0], 2);
    }

    #[test]
    fn quad_ext_norm_equation_and_nonsquare() {
        for ring in rings() {
            let ext = make_quad_ext(&ring).unwrap();
            assert_eq!(ext.norm(&ext.eps_e), ext.eps_f);
            assert!(!ext.is_square_unit(&ext.eps_e).unwrap());
            // trace and conjugation identities
            let x = QuadElem {
                a: ring.add(&ring.one(), &ring.uniformizer()),
                b: ring.from_residue(1),
            };
            let cj = ext.conj(&x);
            assert_eq!(ext.add(&x, &cj), ext.embed(&ext.trace(&x)));
            assert_eq!(ext.mul(&x, &cj), ext.embed(&ext.norm(&x)));
            if ext.is_unit(&x) {
                let inv = ext.invert_unit(&x).unwrap();
                assert_eq!(ext.mul(&x, &inv), ext.one());
            }
        }
    }

    #[test]
    fn norm_surjective_on_units_q3() {
        let ring = make_ring(Backend::Mixed, 3, 1, 3).unwrap();
        let ext = make_quad_ext(&ring).unwrap();
        let mut seen = std::collections::HashSet::new();
        for a in ring.enumerate(3) {
            for b in ring.enumerate(3) {
                let x = QuadElem { a: a.clone(), b };
                if ext.is_unit(&x) {
                    seen.insert(ext.norm(&x));
                }
            }
        }
        let units = ring
            .enumerate(3)
            .into_iter()
            .filter(|x| ring.is_unit(x))
            .count();
        assert_eq!(seen.len(), units);
    }

    #[test]
    fn inversion_precision_tracking() {
        let ring = make_ring(Backend::Mixed, 3, 1, 6).unwrap();
        let x = ring.shift_up(&ring.from_residue(2), 2);
        // invert the unit part after shifting down; two digits are consumed
        let u = ring.shift_down(&x, 2).unwrap();
        assert_eq!(u.digits.len(), 4);
        let inv = ring.invert_unit(&u).unwrap();
        assert_eq!(inv.digits.len(), 4);
        assert_eq!(ring.mul(&u, &inv).digits.len(), 4);
    }
}
