//! Cuspidal character data over the residue field and exact fixed-space
//! dimensions for level-one compactly induced representations.
//!
//! The inducing character is built from a regular character of the quadratic
//! extension of the residue field and verified irreducible by an exact inner
//! product, never trusted. Fixed-space dimensions come from the double-coset
//! decomposition of the induced representation: each coset class reduces to
//! a finite character sum over the residue field, shells vanish once the
//! congruence depth clears the level, and every contribution is checked to
//! be a non-negative integer.

use crate::characters::UnitChar;
use crate::cyclotomic::Cyclotomic;
use crate::error::{Error, Result};
use crate::local_rings::ResidueField;
use num_bigint::BigInt;
use num_rational::BigRational;

/// Arithmetic in the quadratic extension of the residue field, with a
/// discrete logarithm table for evaluating its multiplicative characters.
/// Elements are pairs `(a, b)` standing for `a + b s` with `s^2` a fixed
/// non-square.
pub struct QuadResidue {
    pub fq: ResidueField,
    pub q: u64,
    pub nonsquare: u64,
    dlog: Vec<u64>,
}

pub type QrElem = (u64, u64);

impl QuadResidue {
    pub fn new(p: u64, f: u32) -> Result<QuadResidue> {
        let fq = ResidueField::new(p, f)?;
        let q = fq.q;
        let nonsquare = (1..q)
            .find(|&a| !fq.is_square(a))
            .ok_or_else(|| Error::Internal("no non-square in an odd residue field".into()))?;
        let mut qr = QuadResidue { fq, q, nonsquare, dlog: vec![0; (q * q) as usize] };
        let gen = (0..q * q)
            .map(|c| (c / q, c % q))
            .filter(|&x| x != (0, 0))
            .find(|&x| qr.order(x) == q * q - 1)
            .ok_or_else(|| Error::Internal("quadratic residue extension has no generator".into()))?;
        let mut acc = (1u64, 0u64);
        for k in 0..q * q - 1 {
            qr.dlog[(acc.0 * q + acc.1) as usize] = k;
            acc = qr.mul(acc, gen);
        }
        Ok(qr)
    }

    pub fn mul(&self, x: QrElem, y: QrElem) -> QrElem {
        let f = &self.fq;
        (
            f.add(f.mul(x.0, y.0), f.mul(self.nonsquare, f.mul(x.1, y.1))),
            f.add(f.mul(x.0, y.1), f.mul(x.1, y.0)),
        )
    }

    pub fn frobenius(&self, x: QrElem) -> QrElem {
        (x.0, self.fq.neg(x.1))
    }

    fn order(&self, x: QrElem) -> u64 {
        let mut acc = x;
        let mut n = 1;
        while acc != (1, 0) {
            acc = self.mul(acc, x);
            n += 1;
        }
        n
    }

    pub fn dlog(&self, x: QrElem) -> Result<u64> {
        if x == (0, 0) {
            return Err(Error::NotInvertible("zero in the residue extension".into()));
        }
        Ok(self.dlog[(x.0 * self.q + x.1) as usize])
    }
}

/// Conjugacy classes of the residue general linear group, labelled by
/// eigenvalue data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GlClass {
    Central(u64),
    CentralUnipotent(u64),
    Split(u64, u64),
    Elliptic(u64, u64),
}

/// A verified irreducible cuspidal character of the rank-two residue group.
pub struct CuspidalCharData {
    pub theta_exp: u64,
    pub dim: u64,
    /// the central character at `-1`, always a sign
    pub omega_minus_one: i64,
    /// whether the restriction to the determinant-one subgroup is a sum of
    /// two irreducible halves
    pub splits: bool,
    pub table: Vec<(GlClass, Cyclotomic)>,
    pub qr: QuadResidue,
}

impl CuspidalCharData {
    fn theta(&self, x: QrElem) -> Result<Cyclotomic> {
        let n = self.qr.q * self.qr.q - 1;
        Ok(Cyclotomic::root(
            n,
            ((self.theta_exp * self.qr.dlog(x)?) % n) as i64,
        ))
    }

    fn theta_res(&self, a: u64) -> Result<Cyclotomic> {
        self.theta((a, 0))
    }

    /// Character value on an arbitrary matrix `[a, b, c, d]` over the
    /// residue field with non-zero determinant.
    pub fn value(&self, m: [u64; 4]) -> Result<Cyclotomic> {
        let f = &self.qr.fq;
        let det = f.sub(f.mul(m[0], m[3]), f.mul(m[1], m[2]));
        if det == 0 {
            return Err(Error::Incompatible("singular matrix in a character value".into()));
        }
        let tr = f.add(m[0], m[3]);
        let four = f.add(f.add(1, 1), f.add(1, 1));
        let disc = f.sub(f.mul(tr, tr), f.mul(four, det));
        if m[1] == 0 && m[2] == 0 && m[0] == m[3] {
            return Ok(self
                .theta_res(m[0])?
                .scale(&BigRational::from(BigInt::from(self.qr.q as i64 - 1))));
        }
        if disc == 0 {
            let half = f.inv(f.add(1, 1))?;
            return Ok(self.theta_res(f.mul(tr, half))?.neg());
        }
        if f.is_square(disc) {
            return Ok(Cyclotomic::zero());
        }
        // elliptic: eigenvalue (tr + r s) / 2 with r^2 s^2 = disc
        let r = (1..self.qr.q)
            .find(|&r| f.mul(self.qr.nonsquare, f.mul(r, r)) == disc)
            .ok_or_else(|| Error::Internal("non-square without a twisted root".into()))?;
        let half = f.inv(f.add(1, 1))?;
        let lam = (f.mul(tr, half), f.mul(r, half));
        self.theta(lam)?.add(&self.theta(self.qr.frobenius(lam))?)
            .map(|v| v.neg())
    }
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Builds the cuspidal character attached to a regular character of the
/// quadratic residue extension, then verifies irreducibility, the size of
/// the restriction to the determinant-one subgroup, and cuspidality, all by
/// exact summation over the full finite group.
pub fn cuspidal_character(p: u64, f: u32, theta_exp: u64) -> Result<CuspidalCharData> {
    let qr = QuadResidue::new(p, f)?;
    let q = qr.q;
    let n = q * q - 1;
    let theta_exp = theta_exp % n;
    if (theta_exp * q) % n == theta_exp {
        return Err(Error::Incompatible(
            "character of the residue extension is not regular".into(),
        ));
    }
    let omega_minus_one = if ((theta_exp * (n / 2)) % n) == 0 { 1 } else { -1 };
    let mut data = CuspidalCharData {
        theta_exp,
        dim: q - 1,
        omega_minus_one,
        splits: false,
        table: Vec::new(),
        qr,
    };
    // class table, for reporting and for the exactness of everything below
    let mut table = Vec::new();
    for a in 1..q {
        table.push((GlClass::Central(a), data.value([a, 0, 0, a])?));
        table.push((GlClass::CentralUnipotent(a), data.value([a, 1, 0, a])?));
    }
    for a in 1..q {
        for b in a + 1..q {
            table.push((GlClass::Split(a, b), data.value([a, 0, 0, b])?));
        }
    }
    for a in 0..q {
        for b in 1..=(q - 1) / 2 {
            table.push((GlClass::Elliptic(a, b), {
                // matrix with eigenvalue a + b s: companion of its minimal
                // polynomial
                let fq = &data.qr.fq;
                let norm = fq.sub(fq.mul(a, a), fq.mul(data.qr.nonsquare, fq.mul(b, b)));
                let tr = fq.add(a, a);
                data.value([0, fq.neg(norm), 1, tr])?
            }));
        }
    }
    data.table = table;
    // exact irreducibility and restriction-splitting checks over the full
    // group, element by element
    let fq0 = ResidueField::new(p, f)?;
    let mut gl_sum = Cyclotomic::zero();
    let mut gl_count = 0i64;
    let mut sl_sum = Cyclotomic::zero();
    let mut sl_count = 0i64;
    for a in 0..q {
        for b in 0..q {
            for c in 0..q {
                for d in 0..q {
                    let det = fq0.sub(fq0.mul(a, d), fq0.mul(b, c));
                    if det == 0 {
                        continue;
                    }
                    let v = data.value([a, b, c, d])?;
                    let sq = v.mul(&v.conj())?;
                    gl_sum = gl_sum.add(&sq)?;
                    gl_count += 1;
                    if det == 1 {
                        sl_sum = sl_sum.add(&sq)?;
                        sl_count += 1;
                    }
                }
            }
        }
    }
    let gl_ip = gl_sum.to_rational()? / BigRational::from(BigInt::from(gl_count));
    if gl_ip != rat(1, 1) {
        return Err(Error::Internal("cuspidal character is not irreducible".into()));
    }
    let sl_ip = sl_sum.to_rational()? / BigRational::from(BigInt::from(sl_count));
    if sl_ip == rat(2, 1) {
        data.splits = true;
    } else if sl_ip != rat(1, 1) {
        return Err(Error::Internal(
            "restriction splits into an unexpected number of pieces".into(),
        ));
    }
    // cuspidality: the averages over both unipotent lines vanish
    for s in [1, data.qr.fq.neg(1)] {
        let mut lower = Cyclotomic::zero();
        let mut upper = Cyclotomic::zero();
        for c in 0..q {
            lower = lower.add(&data.value([s, 0, c, s])?)?;
            upper = upper.add(&data.value([s, c, 0, s])?)?;
        }
        if !lower.is_zero() || !upper.is_zero() {
            return Err(Error::Internal("cuspidal character sees a unipotent line".into()));
        }
    }
    Ok(data)
}

/// The data a fixed-space computation actually consumes from one inducing
/// representation: its dimension and the unipotent-line averages of its
/// character, kept as exact values so that the integrality checks downstream
/// stay meaningful.
pub struct InducingDatum {
    pub q: u64,
    pub dim: BigRational,
    /// character at `s I` for `s = 1, -1`
    pub central: [Cyclotomic; 2],
    /// `(1/q) sum_c chi(s nbar(c))` for `s = 1, -1`
    pub lower_avg: [Cyclotomic; 2],
    /// `(1/q) sum_b chi(s n(b))` for `s = 1, -1`
    pub upper_avg: [Cyclotomic; 2],
}

/// The members of the packet attached to the datum: one entry when the
/// restriction stays irreducible, two (the halves) when it splits. The two
/// halves share every value a coset-class sum consumes, because the
/// difference of their characters integrates to zero over each unipotent
/// line.
pub fn inducing_data(data: &CuspidalCharData) -> Result<Vec<InducingDatum>> {
    let q = data.qr.q;
    let neg1 = data.qr.fq.neg(1);
    let qr_rat = rat(1, q as i64);
    let mut central = Vec::new();
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for s in [1, neg1] {
        central.push(data.value([s, 0, 0, s])?);
        let mut lo = Cyclotomic::zero();
        let mut up = Cyclotomic::zero();
        for c in 0..q {
            lo = lo.add(&data.value([s, 0, c, s])?)?;
            up = up.add(&data.value([s, c, 0, s])?)?;
        }
        lower.push(lo.scale(&qr_rat));
        upper.push(up.scale(&qr_rat));
    }
    let full = InducingDatum {
        q,
        dim: rat(q as i64 - 1, 1),
        central: [central[0].clone(), central[1].clone()],
        lower_avg: [lower[0].clone(), lower[1].clone()],
        upper_avg: [upper[0].clone(), upper[1].clone()],
    };
    if !data.splits {
        return Ok(vec![full]);
    }
    let h = rat(1, 2);
    let half = || InducingDatum {
        q,
        dim: rat(q as i64 - 1, 2),
        central: [central[0].scale(&h), central[1].scale(&h)],
        lower_avg: [lower[0].scale(&h), lower[1].scale(&h)],
        upper_avg: [upper[0].scale(&h), upper[1].scale(&h)],
    };
    Ok(vec![half(), half()])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tower {
    K,
    KPrime,
}

/// Packet shape read off from the inducing datum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PacketKind {
    Unramified2 { level: usize, conductor: usize },
    Unramified4 { conductor: usize },
}

pub fn packet_taxonomy(data: &CuspidalCharData) -> PacketKind {
    if data.splits {
        PacketKind::Unramified4 { conductor: 2 }
    } else {
        PacketKind::Unramified2 { level: 1, conductor: 2 }
    }
}

pub fn admissible(data: &CuspidalCharData, eta: &UnitChar) -> Result<bool> {
    Ok(eta_sign(eta)? == data.omega_minus_one)
}

fn eta_sign(eta: &UnitChar) -> Result<i64> {
    let ring = &eta.group.ring;
    let r = eta.value(&ring.neg(&ring.one()))?;
    if r.is_one() {
        Ok(1)
    } else if r.pow(2).is_one() {
        Ok(-1)
    } else {
        Err(Error::Internal("character value at -1 is not a sign".into()))
    }
}

/// One coset-class contribution: an exact character average, forced to be a
/// non-negative integer.
fn cell_value(
    signs: (i64, i64),
    weight: BigRational,
    x_plus: &Cyclotomic,
    x_minus: &Cyclotomic,
) -> Result<BigRational> {
    let mut total = x_plus.scale(&BigRational::from(BigInt::from(signs.0)));
    total = total.add(&x_minus.scale(&BigRational::from(BigInt::from(signs.1))))?;
    let v = total.to_rational()? * weight;
    if !v.is_integer() || v < BigRational::from(BigInt::from(0)) {
        return Err(Error::Internal(
            "coset-class contribution is not a non-negative integer".into(),
        ));
    }
    Ok(v)
}

/// Shell value at congruence depth `depth` for level `m`: the sum of the
/// coset-class contributions of that depth. Even depths belong to the
/// standard-vertex tower, odd depths to the opposite one.
fn shell_value(
    d: &InducingDatum,
    signs: (i64, i64),
    m: usize,
    depth: usize,
) -> Result<BigRational> {
    let q = d.q as i64;
    if depth == 0 {
        // single class; the value averages the upper unipotent line
        return cell_value(signs, rat(1, q - 1), &d.upper_avg[0], &d.upper_avg[1]);
    }
    let mut total = cell_value(signs, rat(1, q - 1), &d.lower_avg[0], &d.lower_avg[1])?;
    // two square classes per intermediate stratum of the coset tree
    let strata = depth.min(m) - 1;
    for _ in 0..2 * strata {
        total += cell_value(signs, rat(1, 2), &d.lower_avg[0], &d.lower_avg[1])?;
    }
    if depth < m {
        total += cell_value(signs, rat(1, q - 1), &d.central[0], &d.central[1])?;
    } else {
        total += cell_value(signs, rat(1, q - 1), &d.lower_avg[0], &d.lower_avg[1])?;
    }
    Ok(total)
}

/// Exact dimension of the level-`m` isotypic space of the compactly induced
/// representation, on either vertex tower. Shells are accumulated until two
/// consecutive ones vanish; a non-zero shell past the hard cap is an error.
pub fn mackey_dims(
    d: &InducingDatum,
    eta: &UnitChar,
    m: usize,
    tower: Tower,
) -> Result<usize> {
    if m == 0 {
        return Err(Error::Incompatible(
            "isotypic spaces here start at level one".into(),
        ));
    }
    let c = eta.conductor()?;
    if c > m {
        return Err(Error::Incompatible(
            "character level exceeds the subgroup level".into(),
        ));
    }
    if c > 1 {
        // every coset class averages the character over the full unit
        // filtration it is non-trivial on
        return Ok(0);
    }
    let signs = (1i64, eta_sign(eta)?);
    let mut total = BigRational::from(BigInt::from(0));
    let mut depth = match tower {
        Tower::K => 0,
        Tower::KPrime => 1,
    };
    let mut zero_run = 0;
    while zero_run < 2 {
        if depth > m + 4 {
            return Err(Error::Internal(
                "shells failed to vanish past the level".into(),
            ));
        }
        let t = shell_value(d, signs, m, depth)?;
        if t == BigRational::from(BigInt::from(0)) {
            zero_run += 1;
        } else {
            zero_run = 0;
        }
        total += t;
        depth += 2;
    }
    let n = total
        .to_integer()
        .try_into()
        .map_err(|_| Error::Internal("negative dimension".into()))?;
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characters::{enumerate_unit_chars, unit_group};
    use crate::groups::{double_cosets, mat_mul, sl2_group, ScalarTable, TableRing};
    use crate::local_rings::{make_ring, Backend};

    fn zero() -> BigRational {
        BigRational::from(BigInt::from(0))
    }

    #[test]
    fn regular_orbit_count_and_split_classes() {
        // splitting happens exactly when the exponent is fixed by the
        // quadratic twist, forcing it into one residue class modulo q + 1
        for (p, expect_orbits, expect_split) in [(3u64, 3usize, 1usize), (5, 10, 2)] {
            let n = p * p - 1;
            let mut orbits = Vec::new();
            let mut split = 0;
            for t in 1..n {
                if (t * p) % n == t {
                    continue;
                }
                if orbits.iter().any(|&s| s == t || (s * p) % n == t) {
                    continue;
                }
                orbits.push(t);
                let data = cuspidal_character(p, 1, t).unwrap();
                assert_eq!(data.dim, p - 1);
                assert_eq!(data.splits, t % (p + 1) == (p + 1) / 2, "p={p} t={t}");
                if data.splits {
                    split += 1;
                }
            }
            assert_eq!(orbits.len(), expect_orbits, "p = {p}");
            assert_eq!(split, expect_split, "p = {p}");
        }
    }

    #[test]
    fn irregular_character_rejected() {
        assert!(cuspidal_character(3, 1, 4).is_err());
        assert!(cuspidal_character(3, 1, 0).is_err());
    }

    fn find_data(p: u64, want_split: bool) -> CuspidalCharData {
        let n = p * p - 1;
        (1..n)
            .filter(|&t| (t * p) % n != t)
            .map(|t| cuspidal_character(p, 1, t).unwrap())
            .find(|d| d.splits == want_split)
            .expect("such a datum exists")
    }

    #[test]
    fn tower_dimensions_match_closed_forms() {
        // irreducible restriction: dims 2*floor((m-1)/2) and 2*floor(m/2);
        // split halves: the same with the factor 2 dropped
        for p in [3u64, 5] {
            let ring = make_ring(Backend::Mixed, p, 1, 4).unwrap();
            let ug = unit_group(&ring, 1).unwrap();
            for want_split in [false, true] {
                let data = find_data(p, want_split);
                let members = inducing_data(&data).unwrap();
                let scale = if want_split { 1 } else { 2 };
                for member in &members {
                    for eta in enumerate_unit_chars(&ug) {
                        let ok = admissible(&data, &eta).unwrap();
                        for m in 1..=4usize {
                            let dk = mackey_dims(member, &eta, m, Tower::K).unwrap();
                            let dkp = mackey_dims(member, &eta, m, Tower::KPrime).unwrap();
                            if !ok {
                                assert_eq!((dk, dkp), (0, 0));
                                continue;
                            }
                            assert_eq!(dk, scale * ((m - 1) / 2), "p={p} m={m}");
                            assert_eq!(dkp, scale * (m / 2), "p={p} m={m}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn taxonomy_and_admissibility() {
        let data = find_data(3, true);
        assert_eq!(packet_taxonomy(&data), PacketKind::Unramified4 { conductor: 2 });
        assert_eq!(inducing_data(&data).unwrap().len(), 2);
        let data = find_data(3, false);
        assert_eq!(
            packet_taxonomy(&data),
            PacketKind::Unramified2 { level: 1, conductor: 2 }
        );
        let ring = make_ring(Backend::Mixed, 3, 1, 4).unwrap();
        let ug = unit_group(&ring, 1).unwrap();
        let signs: Vec<i64> = enumerate_unit_chars(&ug)
            .iter()
            .map(|e| eta_sign(e).unwrap())
            .collect();
        assert!(signs.contains(&1) && signs.contains(&-1));
    }

    /// Brute-force shell value in a finite quotient, trusting nothing about
    /// the coset-class reductions: enumerate the double cosets, then average
    /// the character over each twisting subgroup directly.
    fn honest_shell(
        data: &CuspidalCharData,
        eta: &UnitChar,
        m: usize,
        depth: usize,
    ) -> (usize, BigRational) {
        let level = (depth + 1).max(m);
        let ring = make_ring(Backend::Mixed, data.qr.q, 1, level).unwrap();
        let scal = TableRing::new(&ring, level).unwrap();
        let g = sl2_group(scal).unwrap();
        let ug = unit_group(&ring, level).unwrap();
        // generators of the depth-`n` congruence subgroup and of the level
        let cong_gens = |n: usize| -> Vec<u32> {
            let mut out = Vec::new();
            for &b in &ug.grp.basis {
                let u = crate::characters::decode_relem(&ring, b, level);
                let ui = ring.invert_unit(&u).unwrap();
                out.push(
                    g.find([g.scal.encode(&u), 0, 0, g.scal.encode(&ui)]).unwrap(),
                );
            }
            let one = g.scal.s_one();
            for i in 0..level {
                let x = g.scal.encode(&ring.shift_up(&ring.one(), i));
                out.push(g.find([one, x, 0, one]).unwrap());
            }
            for i in n..level {
                let x = g.scal.encode(&ring.shift_up(&ring.one(), i));
                out.push(g.find([one, 0, x, one]).unwrap());
            }
            out
        };
        let part = double_cosets(&g, &cong_gens(depth), &cong_gens(m));
        // level subgroup elements
        let km: Vec<u32> = (0..g.size() as u32)
            .filter(|&i| (g.scal.s_val(g.mat(i)[2]) as usize) >= m)
            .collect();
        let mut total = zero();
        for &rep in &part.reps {
            let k = g.mat(rep);
            let kinv = crate::groups::mat_inv(&g.scal, k).unwrap();
            let mut sum = Cyclotomic::zero();
            let mut count = 0i64;
            for &xi in &km {
                let x = g.mat(xi);
                let z = mat_mul(&g.scal, mat_mul(&g.scal, k, x), kinv);
                let c = g.scal.decode(z[2]);
                if ring.valuation(&c) < depth {
                    continue;
                }
                count += 1;
                let res = |code: u32| ring.to_u64(&ring.truncate(&g.scal.decode(code), 1));
                let phi = if depth == 0 {
                    [res(z[0]), res(z[1]), res(z[2]), res(z[3])]
                } else {
                    let cs = ring.shift_down(&c, depth).unwrap();
                    [res(z[0]), 0, ring.to_u64(&ring.truncate(&cs, 1)), res(z[3])]
                };
                let chi = data.value(phi).unwrap();
                let dx = g.scal.decode(x[3]);
                let ev = eta.value(&dx).unwrap().inv().to_cyclotomic();
                sum = sum.add(&chi.mul(&ev).unwrap()).unwrap();
            }
            if count > 0 {
                total += sum.to_rational().unwrap() / BigRational::from(BigInt::from(count));
            }
        }
        (part.reps.len(), total)
    }

    #[test]
    fn shells_match_brute_force_in_small_quotients() {
        let data = find_data(3, false);
        let member = &inducing_data(&data).unwrap()[0];
        let ring = make_ring(Backend::Mixed, 3, 1, 4).unwrap();
        let ug = unit_group(&ring, 1).unwrap();
        let etas = enumerate_unit_chars(&ug);
        for m in 1..=2usize {
            for depth in 0..=3usize {
                let expected_cells = if depth == 0 {
                    1
                } else {
                    2 + 2 * (depth.min(m) - 1)
                };
                for eta in &etas {
                    let (cells, honest) = honest_shell(&data, eta, m, depth);
                    assert_eq!(cells, expected_cells, "m={m} depth={depth}");
                    let signs = (1i64, eta_sign(eta).unwrap());
                    let formula = shell_value(member, signs, m, depth).unwrap();
                    assert_eq!(honest, formula, "m={m} depth={depth}");
                }
            }
        }
    }
}
