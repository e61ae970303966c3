//! Exact arithmetic in cyclotomic fields `Q(zeta_M)` together with a formal
//! square root of `q`.
//!
//! Character values are roots of unity; normalized induced-representation
//! values pick up half-integer powers of `q`. Everything a test compares is
//! therefore an element `c0 + c1 sqrt(q)` with `c0, c1` in some `Q(zeta_M)`.
//! Elements keep a sparse exponent map modulo `x^M - 1` and are only reduced
//! modulo the cyclotomic polynomial when compared, inverted, or extracted,
//! so hot summation loops stay cheap.

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

const MAX_ORDER: u64 = 1 << 17;

pub fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

fn divisors(n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 1;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            if d != n / d {
                out.push(n / d);
            }
        }
        d += 1;
    }
    out.sort_unstable();
    out
}

/// Coefficients `c_0 .. c_phi(m)` of the `m`-th cyclotomic polynomial,
/// computed bottom-up by exact division of `x^d - 1` and cached globally.
pub fn cyclotomic_poly(m: u64) -> Arc<Vec<i64>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Arc<Vec<i64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(hit) = cache.lock().unwrap().get(&m) {
        return hit.clone();
    }
    let mut local: HashMap<u64, Arc<Vec<i64>>> = cache.lock().unwrap().clone();
    for d in divisors(m) {
        if local.contains_key(&d) {
            continue;
        }
        // x^d - 1 divided by the cyclotomic polynomials of proper divisors
        let mut num = vec![0i64; d as usize + 1];
        num[0] = -1;
        num[d as usize] = 1;
        for e in divisors(d) {
            if e == d {
                continue;
            }
            let phi_e = local[&e].clone();
            num = poly_div_exact(&num, &phi_e);
        }
        local.insert(d, Arc::new(num));
    }
    let result = local[&m].clone();
    let mut guard = cache.lock().unwrap();
    for (k, v) in local {
        guard.entry(k).or_insert(v);
    }
    result
}

fn poly_div_exact(num: &[i64], den: &[i64]) -> Vec<i64> {
    let dn = num.len() - 1;
    let dd = den.len() - 1;
    debug_assert_eq!(den[dd], 1);
    let mut rem = num.to_vec();
    let mut quot = vec![0i64; dn - dd + 1];
    for k in (dd..=dn).rev() {
        let c = rem[k];
        if c != 0 {
            quot[k - dd] = c;
            for (j, &dc) in den.iter().enumerate() {
                rem[k - dd + j] -= c * dc;
            }
        }
    }
    debug_assert!(rem.iter().all(|&c| c == 0));
    quot
}

/// A root of unity `zeta_order^exp`, kept in lowest terms so that equality is
/// structural.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RootOfUnity {
    pub order: u64,
    pub exp: u64,
}

impl RootOfUnity {
    pub fn new(order: u64, exp: i64) -> RootOfUnity {
        assert!(order > 0);
        let e = exp.rem_euclid(order as i64) as u64;
        if e == 0 {
            return RootOfUnity { order: 1, exp: 0 };
        }
        let g = gcd(e, order);
        RootOfUnity {
            order: order / g,
            exp: e / g,
        }
    }

    pub fn one() -> RootOfUnity {
        RootOfUnity { order: 1, exp: 0 }
    }

    pub fn is_one(&self) -> bool {
        self.order == 1
    }

    pub fn mul(&self, other: &RootOfUnity) -> RootOfUnity {
        let m = lcm(self.order, other.order);
        RootOfUnity::new(
            m,
            (self.exp * (m / self.order) + other.exp * (m / other.order)) as i64,
        )
    }

    pub fn inv(&self) -> RootOfUnity {
        RootOfUnity::new(self.order, -(self.exp as i64))
    }

    pub fn pow(&self, k: i64) -> RootOfUnity {
        let e = (self.exp as i128 * k as i128).rem_euclid(self.order as i128) as i64;
        RootOfUnity::new(self.order, e)
    }

    pub fn to_cyclotomic(&self) -> Cyclotomic {
        Cyclotomic::root(self.order, self.exp as i64)
    }
}

/// Element of `Q(zeta_order)`, stored as a sparse rational combination of
/// powers of the chosen primitive root, exponents taken modulo the order.
#[derive(Debug, Clone)]
pub struct Cyclotomic {
    pub order: u64,
    coeffs: BTreeMap<u64, BigRational>,
}

fn rat_i64(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

impl Cyclotomic {
    pub fn zero() -> Cyclotomic {
        Cyclotomic {
            order: 1,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn from_rational(r: BigRational) -> Cyclotomic {
        let mut coeffs = BTreeMap::new();
        if !r.is_zero() {
            coeffs.insert(0, r);
        }
        Cyclotomic { order: 1, coeffs }
    }

    pub fn from_i64(n: i64) -> Cyclotomic {
        Cyclotomic::from_rational(rat_i64(n))
    }

    pub fn root(order: u64, exp: i64) -> Cyclotomic {
        let r = RootOfUnity::new(order, exp);
        let mut coeffs = BTreeMap::new();
        coeffs.insert(r.exp, BigRational::one());
        Cyclotomic {
            order: r.order,
            coeffs,
        }
    }

    fn upcast(&self, m: u64) -> Cyclotomic {
        debug_assert_eq!(m % self.order, 0);
        let k = m / self.order;
        Cyclotomic {
            order: m,
            coeffs: self.coeffs.iter().map(|(&e, c)| (e * k, c.clone())).collect(),
        }
    }

    fn common(&self, other: &Cyclotomic) -> Result<(Cyclotomic, Cyclotomic)> {
        let m = lcm(self.order, other.order);
        if m > MAX_ORDER {
            return Err(Error::ResourceGuard(format!("cyclotomic order {m}")));
        }
        Ok((self.upcast(m), other.upcast(m)))
    }

    pub fn add(&self, other: &Cyclotomic) -> Result<Cyclotomic> {
        let (mut a, b) = self.common(other)?;
        for (e, c) in b.coeffs {
            let slot = a.coeffs.entry(e).or_insert_with(BigRational::zero);
            *slot += c;
            if slot.is_zero() {
                a.coeffs.remove(&e);
            }
        }
        Ok(a)
    }

    pub fn neg(&self) -> Cyclotomic {
        Cyclotomic {
            order: self.order,
            coeffs: self.coeffs.iter().map(|(&e, c)| (e, -c.clone())).collect(),
        }
    }

    pub fn sub(&self, other: &Cyclotomic) -> Result<Cyclotomic> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Cyclotomic) -> Result<Cyclotomic> {
        let (a, b) = self.common(other)?;
        let m = a.order;
        let mut coeffs: BTreeMap<u64, BigRational> = BTreeMap::new();
        for (&e1, c1) in &a.coeffs {
            for (&e2, c2) in &b.coeffs {
                let e = (e1 + e2) % m;
                let slot = coeffs.entry(e).or_insert_with(BigRational::zero);
                *slot += c1 * c2;
                if slot.is_zero() {
                    coeffs.remove(&e);
                }
            }
        }
        Ok(Cyclotomic { order: m, coeffs })
    }

    pub fn scale(&self, r: &BigRational) -> Cyclotomic {
        if r.is_zero() {
            return Cyclotomic::zero();
        }
        Cyclotomic {
            order: self.order,
            coeffs: self.coeffs.iter().map(|(&e, c)| (e, c * r)).collect(),
        }
    }

    /// Complex conjugation `zeta -> zeta^{-1}`.
    pub fn conj(&self) -> Cyclotomic {
        Cyclotomic {
            order: self.order,
            coeffs: self
                .coeffs
                .iter()
                .map(|(&e, c)| ((self.order - e) % self.order, c.clone()))
                .collect(),
        }
    }

    /// Canonical coefficients against the power basis of `Q(zeta_order)`:
    /// remainder modulo the cyclotomic polynomial.
    pub fn reduced(&self) -> Vec<BigRational> {
        let phi = cyclotomic_poly(self.order);
        let deg = phi.len() - 1;
        let mut work = vec![BigRational::zero(); self.order as usize + 1];
        for (&e, c) in &self.coeffs {
            work[e as usize] += c;
        }
        for k in (deg..work.len()).rev() {
            if !work[k].is_zero() {
                let c = std::mem::replace(&mut work[k], BigRational::zero());
                for (j, &pc) in phi.iter().take(deg).enumerate() {
                    work[k - deg + j] -= &c * rat_i64(pc);
                }
            }
        }
        work.truncate(deg);
        work
    }

    pub fn is_zero(&self) -> bool {
        if self.coeffs.is_empty() {
            return true;
        }
        self.reduced().iter().all(|c| c.is_zero())
    }

    /// Extract a rational value; errors if the element is irrational.
    pub fn to_rational(&self) -> Result<BigRational> {
        let red = self.reduced();
        if red.iter().skip(1).any(|c| !c.is_zero()) {
            return Err(Error::Internal("irrational cyclotomic value".into()));
        }
        Ok(red.first().cloned().unwrap_or_else(BigRational::zero))
    }

    pub fn invert(&self) -> Result<Cyclotomic> {
        let red = self.reduced();
        if red.iter().all(|c| c.is_zero()) {
            return Err(Error::NotInvertible("zero cyclotomic".into()));
        }
        let phi: Vec<BigRational> = cyclotomic_poly(self.order)
            .iter()
            .map(|&c| rat_i64(c))
            .collect();
        // extended euclid: s*red + t*phi = g with g a nonzero constant,
        // since phi is irreducible over Q
        let (g, s) = poly_xgcd(&red, &phi);
        if g.len() != 1 || g[0].is_zero() {
            return Err(Error::Internal("cyclotomic gcd not constant".into()));
        }
        let ginv = g[0].recip();
        let coeffs = s
            .into_iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(e, c)| (e as u64, c * &ginv))
            .collect();
        Ok(Cyclotomic {
            order: self.order,
            coeffs,
        })
    }

    pub fn to_complex(&self) -> (f64, f64) {
        let mut re = 0.0;
        let mut im = 0.0;
        for (&e, c) in &self.coeffs {
            let v = c.to_f64().expect("rational out of f64 range");
            let ang = 2.0 * std::f64::consts::PI * e as f64 / self.order as f64;
            re += v * ang.cos();
            im += v * ang.sin();
        }
        (re, im)
    }
}

impl PartialEq for Cyclotomic {
    fn eq(&self, other: &Cyclotomic) -> bool {
        match self.sub(other) {
            Ok(d) => d.is_zero(),
            Err(_) => false,
        }
    }
}

impl Eq for Cyclotomic {}

fn poly_trim(p: &mut Vec<BigRational>) {
    while p.len() > 1 && p.last().map(|c| c.is_zero()).unwrap_or(false) {
        p.pop();
    }
}

/// Returns `(g, s)` with `s*a = g (mod b)` and `g = gcd(a, b)`.
fn poly_xgcd(a: &[BigRational], b: &[BigRational]) -> (Vec<BigRational>, Vec<BigRational>) {
    let mut r0: Vec<BigRational> = b.to_vec();
    let mut r1: Vec<BigRational> = a.to_vec();
    poly_trim(&mut r0);
    poly_trim(&mut r1);
    let mut s0 = vec![BigRational::zero()];
    let mut s1 = vec![BigRational::one()];
    while !(r1.len() == 1 && r1[0].is_zero()) {
        let (q, r2) = poly_divmod(&r0, &r1);
        let s2 = poly_sub(&s0, &poly_mul(&q, &s1));
        r0 = r1;
        r1 = r2;
        s0 = s1;
        s1 = s2;
    }
    (r0, s0)
}

fn poly_mul(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    poly_trim(&mut out);
    out
}

fn poly_sub(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let n = a.len().max(b.len());
    let mut out = vec![BigRational::zero(); n];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, y) in b.iter().enumerate() {
        out[i] -= y;
    }
    poly_trim(&mut out);
    out
}

fn poly_divmod(a: &[BigRational], b: &[BigRational]) -> (Vec<BigRational>, Vec<BigRational>) {
    let mut rem = a.to_vec();
    poly_trim(&mut rem);
    let db = b.len() - 1;
    if rem.len() <= db {
        return (vec![BigRational::zero()], rem);
    }
    let lead = b[db].recip();
    let mut quot = vec![BigRational::zero(); rem.len() - db];
    for k in (db..rem.len()).rev() {
        if rem[k].is_zero() {
            continue;
        }
        let c = &rem[k] * &lead;
        quot[k - db] = c.clone();
        for (j, bc) in b.iter().enumerate() {
            let v = &c * bc;
            rem[k - db + j] -= v;
        }
    }
    poly_trim(&mut rem);
    poly_trim(&mut quot);
    (quot, rem)
}

/// `c0 + c1 sqrt(q)` with both components cyclotomic. `sqrt(q)` is a formal
/// symbol squaring to `q`; when `q` happens to be a perfect square the
/// `c1`-component is folded away so representations stay canonical.
#[derive(Debug, Clone)]
pub struct QHalf {
    pub q: u64,
    pub c0: Cyclotomic,
    pub c1: Cyclotomic,
}

fn exact_sqrt(q: u64) -> Option<u64> {
    let s = (q as f64).sqrt().round() as u64;
    for c in s.saturating_sub(1)..=s + 1 {
        if c * c == q {
            return Some(c);
        }
    }
    None
}

impl QHalf {
    fn fix(mut self) -> QHalf {
        if let Some(s) = exact_sqrt(self.q) {
            if !self.c1.coeffs.is_empty() {
                let folded = self.c1.scale(&rat_i64(s as i64));
                self.c0 = self.c0.add(&folded).expect("fold within same order");
                self.c1 = Cyclotomic::zero();
            }
        }
        self
    }

    pub fn zero(q: u64) -> QHalf {
        QHalf {
            q,
            c0: Cyclotomic::zero(),
            c1: Cyclotomic::zero(),
        }
    }

    pub fn from_cyclotomic(q: u64, c: Cyclotomic) -> QHalf {
        QHalf {
            q,
            c0: c,
            c1: Cyclotomic::zero(),
        }
    }

    pub fn from_rational(q: u64, r: BigRational) -> QHalf {
        QHalf::from_cyclotomic(q, Cyclotomic::from_rational(r))
    }

    pub fn from_i64(q: u64, n: i64) -> QHalf {
        QHalf::from_cyclotomic(q, Cyclotomic::from_i64(n))
    }

    pub fn one(q: u64) -> QHalf {
        QHalf::from_i64(q, 1)
    }

    /// `(sqrt q)^k` for any integer `k`, as an exact element.
    pub fn sqrt_q_pow(q: u64, k: i64) -> QHalf {
        let half = k.rem_euclid(2) == 1;
        let ipow = if half { (k - 1) / 2 } else { k / 2 };
        let mut r = BigRational::one();
        let qb = BigInt::from(q);
        if ipow >= 0 {
            for _ in 0..ipow {
                r *= BigRational::from_integer(qb.clone());
            }
        } else {
            for _ in 0..-ipow {
                r /= BigRational::from_integer(qb.clone());
            }
        }
        let c = Cyclotomic::from_rational(r);
        if half {
            QHalf {
                q,
                c0: Cyclotomic::zero(),
                c1: c,
            }
            .fix()
        } else {
            QHalf::from_cyclotomic(q, c)
        }
    }

    fn check(&self, other: &QHalf) -> Result<()> {
        if self.q != other.q {
            return Err(Error::Incompatible(format!(
                "mixed q: {} vs {}",
                self.q, other.q
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &QHalf) -> Result<QHalf> {
        self.check(other)?;
        Ok(QHalf {
            q: self.q,
            c0: self.c0.add(&other.c0)?,
            c1: self.c1.add(&other.c1)?,
        })
    }

    pub fn sub(&self, other: &QHalf) -> Result<QHalf> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> QHalf {
        QHalf {
            q: self.q,
            c0: self.c0.neg(),
            c1: self.c1.neg(),
        }
    }

    pub fn mul(&self, other: &QHalf) -> Result<QHalf> {
        self.check(other)?;
        let qc = Cyclotomic::from_i64(self.q as i64);
        let c0 = self
            .c0
            .mul(&other.c0)?
            .add(&self.c1.mul(&other.c1)?.mul(&qc)?)?;
        let c1 = self.c0.mul(&other.c1)?.add(&self.c1.mul(&other.c0)?)?;
        Ok(QHalf { q: self.q, c0, c1 }.fix())
    }

    pub fn scale(&self, r: &BigRational) -> QHalf {
        QHalf {
            q: self.q,
            c0: self.c0.scale(r),
            c1: self.c1.scale(r),
        }
    }

    pub fn conj_complex(&self) -> QHalf {
        QHalf {
            q: self.q,
            c0: self.c0.conj(),
            c1: self.c1.conj(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.c0.is_zero() && self.c1.is_zero()
    }

    pub fn invert(&self) -> Result<QHalf> {
        if self.c1.is_zero() {
            return Ok(QHalf {
                q: self.q,
                c0: self.c0.invert()?,
                c1: Cyclotomic::zero(),
            });
        }
        let qc = Cyclotomic::from_i64(self.q as i64);
        let den = self.c0.mul(&self.c0)?.sub(&self.c1.mul(&self.c1)?.mul(&qc)?)?;
        if den.is_zero() {
            return Err(Error::Internal(
                "sqrt(q)-conjugate norm vanished during inversion".into(),
            ));
        }
        let dinv = den.invert()?;
        Ok(QHalf {
            q: self.q,
            c0: self.c0.mul(&dinv)?,
            c1: self.c1.neg().mul(&dinv)?,
        })
    }

    pub fn div(&self, other: &QHalf) -> Result<QHalf> {
        self.mul(&other.invert()?)
    }

    /// Extract a rational value; errors if the element is irrational.
    pub fn to_rational(&self) -> Result<BigRational> {
        if !self.c1.is_zero() {
            return Err(Error::Internal("irrational sqrt(q) component".into()));
        }
        self.c0.to_rational()
    }

    pub fn to_complex(&self) -> (f64, f64) {
        let (r0, i0) = self.c0.to_complex();
        let (r1, i1) = self.c1.to_complex();
        let s = (self.q as f64).sqrt();
        (r0 + s * r1, i0 + s * i1)
    }
}

impl PartialEq for QHalf {
    fn eq(&self, other: &QHalf) -> bool {
        self.q == other.q && self.c0 == other.c0 && self.c1 == other.c1
    }
}

impl Eq for QHalf {}

/// A monomial character value: `root * (sqrt q)^qpow2`. Products of these
/// stay monomials, so hot loops multiply them and only expand into full
/// `QHalf` elements when summed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CharValue {
    pub q: u64,
    pub root: RootOfUnity,
    pub qpow2: i64,
}

impl CharValue {
    pub fn one(q: u64) -> CharValue {
        CharValue {
            q,
            root: RootOfUnity::one(),
            qpow2: 0,
        }
    }

    pub fn from_root(q: u64, root: RootOfUnity) -> CharValue {
        CharValue { q, root, qpow2: 0 }
    }

    pub fn mul(&self, other: &CharValue) -> CharValue {
        debug_assert_eq!(self.q, other.q);
        CharValue {
            q: self.q,
            root: self.root.mul(&other.root),
            qpow2: self.qpow2 + other.qpow2,
        }
    }

    pub fn inv(&self) -> CharValue {
        CharValue {
            q: self.q,
            root: self.root.inv(),
            qpow2: -self.qpow2,
        }
    }

    /// Complex conjugate: roots invert, `sqrt(q)` powers are real.
    pub fn conj(&self) -> CharValue {
        CharValue {
            q: self.q,
            root: self.root.inv(),
            qpow2: self.qpow2,
        }
    }

    pub fn pow(&self, k: i64) -> CharValue {
        CharValue {
            q: self.q,
            root: self.root.pow(k),
            qpow2: self.qpow2 * k,
        }
    }

    pub fn is_one(&self) -> bool {
        self.root.is_one() && self.qpow2 == 0
    }

    pub fn to_qhalf(&self) -> QHalf {
        QHalf::sqrt_q_pow(self.q, self.qpow2)
            .mul(&QHalf::from_cyclotomic(self.q, self.root.to_cyclotomic()))
            .expect("same q")
    }
}

/// Accumulator for large sums of monomial values: buckets counts by
/// `(root, qpow2)` and expands once at the end.
#[derive(Debug, Clone)]
pub struct MonomialSum {
    pub q: u64,
    terms: BTreeMap<(RootOfUnity, i64), BigRational>,
}

impl MonomialSum {
    pub fn new(q: u64) -> MonomialSum {
        MonomialSum {
            q,
            terms: BTreeMap::new(),
        }
    }

    pub fn push(&mut self, v: &CharValue, weight: &BigRational) {
        debug_assert_eq!(v.q, self.q);
        let slot = self
            .terms
            .entry((v.root, v.qpow2))
            .or_insert_with(BigRational::zero);
        *slot += weight;
        if slot.is_zero() {
            self.terms.remove(&(v.root, v.qpow2));
        }
    }

    pub fn push_unit(&mut self, v: &CharValue) {
        self.push(v, &BigRational::one());
    }

    pub fn total(&self) -> Result<QHalf> {
        let mut acc = QHalf::zero(self.q);
        for ((root, qpow2), w) in &self.terms {
            let term = CharValue {
                q: self.q,
                root: *root,
                qpow2: *qpow2,
            }
            .to_qhalf()
            .scale(w);
            acc = acc.add(&term)?;
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclotomic_polys_match_known_values() {
        assert_eq!(*cyclotomic_poly(1), vec![-1, 1]);
        assert_eq!(*cyclotomic_poly(2), vec![1, 1]);
        assert_eq!(*cyclotomic_poly(3), vec![1, 1, 1]);
        assert_eq!(*cyclotomic_poly(4), vec![1, 0, 1]);
        assert_eq!(*cyclotomic_poly(6), vec![1, -1, 1]);
        assert_eq!(*cyclotomic_poly(9), vec![1, 0, 0, 1, 0, 0, 1]);
        assert_eq!(*cyclotomic_poly(12), vec![1, 0, -1, 0, 1]);
        assert_eq!(cyclotomic_poly(105).len(), 49); // first coefficient -2 case
        assert_eq!(cyclotomic_poly(105)[7], -2);
    }

    #[test]
    fn root_sums_vanish() {
        for m in [3u64, 5, 8, 9, 12] {
            let mut acc = Cyclotomic::zero();
            for e in 0..m {
                acc = acc.add(&Cyclotomic::root(m, e as i64)).unwrap();
            }
            assert!(acc.is_zero(), "sum of all {m}-th roots");
        }
    }

    #[test]
    fn primitive_root_sums_are_moebius() {
        // sum over primitive m-th roots equals the Moebius value of m
        for (m, mu) in [(4u64, 0i64), (5, -1), (6, 1), (9, 0), (10, 1), (12, 0)] {
            let mut acc = Cyclotomic::zero();
            for e in 0..m {
                if gcd(e, m) == 1 {
                    acc = acc.add(&Cyclotomic::root(m, e as i64)).unwrap();
                }
            }
            assert_eq!(acc, Cyclotomic::from_i64(mu), "m = {m}");
        }
    }

    #[test]
    fn field_inversion_round_trips() {
        let x = Cyclotomic::root(5, 1)
            .add(&Cyclotomic::from_i64(2))
            .unwrap();
        let xi = x.invert().unwrap();
        assert_eq!(x.mul(&xi).unwrap(), Cyclotomic::from_i64(1));
        let y = Cyclotomic::root(12, 7)
            .sub(&Cyclotomic::root(12, 2))
            .unwrap();
        let yi = y.invert().unwrap();
        assert_eq!(y.mul(&yi).unwrap(), Cyclotomic::from_i64(1));
    }

    #[test]
    fn qhalf_square_root_squares_to_q() {
        for q in [3u64, 5, 9, 25] {
            let s = QHalf::sqrt_q_pow(q, 1);
            assert_eq!(s.mul(&s).unwrap(), QHalf::from_i64(q, q as i64));
            let si = QHalf::sqrt_q_pow(q, -1);
            assert_eq!(s.mul(&si).unwrap(), QHalf::one(q));
        }
    }

    #[test]
    fn perfect_square_q_is_folded() {
        let s = QHalf::sqrt_q_pow(9, 1);
        assert!(s.c1.is_zero());
        assert_eq!(s, QHalf::from_i64(9, 3));
    }

    #[test]
    fn qhalf_inverse_with_mixed_components() {
        let x = QHalf::one(5)
            .add(&QHalf::sqrt_q_pow(5, 1))
            .unwrap();
        let xi = x.invert().unwrap();
        assert_eq!(x.mul(&xi).unwrap(), QHalf::one(5));
    }

    #[test]
    fn monomial_sum_matches_direct_expansion() {
        let q = 3u64;
        let mut acc = MonomialSum::new(q);
        let mut direct = QHalf::zero(q);
        for e in 0..9i64 {
            let v = CharValue {
                q,
                root: RootOfUnity::new(9, e),
                qpow2: (e % 3) - 1,
            };
            acc.push_unit(&v);
            direct = direct.add(&v.to_qhalf()).unwrap();
        }
        assert_eq!(acc.total().unwrap(), direct);
    }

    #[test]
    fn float_embedding_agrees() {
        let x = Cyclotomic::root(7, 3)
            .add(&Cyclotomic::root(7, 5))
            .unwrap()
            .scale(&rat_i64(2));
        let red = Cyclotomic {
            order: 7,
            coeffs: x.reduced()
                .into_iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(e, c)| (e as u64, c))
                .collect(),
        };
        let (r1, i1) = x.to_complex();
        let (r2, i2) = red.to_complex();
        assert!((r1 - r2).abs() < 1e-9 && (i1 - i2).abs() < 1e-9);
    }

    #[test]
    fn rejects_oversized_orders() {
        let a = Cyclotomic::root(65521, 1); // prime near the order cap
        let b = Cyclotomic::root(65519, 1);
        assert!(a.mul(&b).is_err());
    }
}
