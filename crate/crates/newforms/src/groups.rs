//! Finite matrix groups over truncated local rings: `SL2(O/P^n)`, the
//! reduction of the compact unitary group `U(1,1)(O)`, their congruence
//! subgroups, and the double-coset data that computes isotypic dimensions.
//!
//! Ring elements are `u32` codes into precomputed operation tables, matrices
//! are `[u32; 4]`, and groups are sorted key lists so every enumeration is
//! deterministic. Double cosets are found by generator BFS; a coset
//! contributes to an isotypic space exactly when the characters kill its
//! stabilizer pairs, which are collected by a direct scan over the Borel
//! subgroup.

use crate::characters::{encode_quad, encode_relem, decode_quad, decode_relem};
use crate::error::{Error, Result};
use crate::local_rings::{QuadElem, QuadExtSpec, RElem, RingSpec};

const MAX_GROUP: usize = 10_000_000;
const MAX_TABLE: u64 = 4096;

/// Scalar arithmetic on `u32` codes, backed by tables.
pub trait ScalarTable {
    fn size(&self) -> u32;
    fn s_add(&self, a: u32, b: u32) -> u32;
    fn s_mul(&self, a: u32, b: u32) -> u32;
    fn s_neg(&self, a: u32) -> u32;
    /// `u32::MAX` marks a non-unit.
    fn s_inv(&self, a: u32) -> u32;
    fn s_val(&self, a: u32) -> u8;
    fn s_zero(&self) -> u32 {
        0
    }
    fn s_one(&self) -> u32;
    fn s_sub(&self, a: u32, b: u32) -> u32 {
        self.s_add(a, self.s_neg(b))
    }
    fn is_unit(&self, a: u32) -> bool {
        self.s_val(a) == 0
    }
}

/// `O/P^n` with all operations tabulated.
#[derive(Debug, Clone)]
pub struct TableRing {
    pub ring: RingSpec,
    pub n: usize,
    pub size: u32,
    add: Vec<u32>,
    mul: Vec<u32>,
    neg: Vec<u32>,
    inv: Vec<u32>,
    val: Vec<u8>,
    one: u32,
}

impl TableRing {
    pub fn new(ring: &RingSpec, n: usize) -> Result<TableRing> {
        if n == 0 || n > ring.prec {
            return Err(Error::BadRing(format!("table ring level {n}")));
        }
        let size = (ring.q as u128).pow(n as u32);
        if size > MAX_TABLE as u128 {
            return Err(Error::ResourceGuard(format!("scalar table of size {size}")));
        }
        let size = size as u32;
        let elems: Vec<RElem> = ring.enumerate(n);
        let mut add = vec![0u32; (size as usize) * (size as usize)];
        let mut mul = vec![0u32; (size as usize) * (size as usize)];
        let mut neg = vec![0u32; size as usize];
        let mut inv = vec![u32::MAX; size as usize];
        let mut val = vec![0u8; size as usize];
        for (i, x) in elems.iter().enumerate() {
            neg[i] = encode_relem(ring, &ring.neg(x), n) as u32;
            val[i] = ring.valuation(x) as u8;
            if ring.is_unit(x) {
                inv[i] = encode_relem(ring, &ring.invert_unit(x)?, n) as u32;
            }
            for (j, y) in elems.iter().enumerate() {
                add[i * size as usize + j] = encode_relem(ring, &ring.add(x, y), n) as u32;
                mul[i * size as usize + j] = encode_relem(ring, &ring.mul(x, y), n) as u32;
            }
        }
        let one = encode_relem(ring, &ring.one(), n) as u32;
        Ok(TableRing {
            ring: ring.clone(),
            n,
            size,
            add,
            mul,
            neg,
            inv,
            val,
            one,
        })
    }

    pub fn encode(&self, x: &RElem) -> u32 {
        encode_relem(&self.ring, &self.ring.truncate(x, self.n), self.n) as u32
    }

    pub fn decode(&self, c: u32) -> RElem {
        decode_relem(&self.ring, c as u64, self.n)
    }
}

impl ScalarTable for TableRing {
    fn size(&self) -> u32 {
        self.size
    }
    fn s_add(&self, a: u32, b: u32) -> u32 {
        self.add[a as usize * self.size as usize + b as usize]
    }
    fn s_mul(&self, a: u32, b: u32) -> u32 {
        self.mul[a as usize * self.size as usize + b as usize]
    }
    fn s_neg(&self, a: u32) -> u32 {
        self.neg[a as usize]
    }
    fn s_inv(&self, a: u32) -> u32 {
        self.inv[a as usize]
    }
    fn s_val(&self, a: u32) -> u8 {
        self.val[a as usize]
    }
    fn s_one(&self) -> u32 {
        self.one
    }
}

/// `O_E/P^n` for the unramified quadratic extension, tabulated, with the
/// Galois conjugation alongside the ring operations.
#[derive(Debug, Clone)]
pub struct TableQuad {
    pub ext: QuadExtSpec,
    pub n: usize,
    pub size: u32,
    pub size_f: u32,
    add: Vec<u32>,
    mul: Vec<u32>,
    neg: Vec<u32>,
    inv: Vec<u32>,
    conj: Vec<u32>,
    val: Vec<u8>,
    one: u32,
}

impl TableQuad {
    pub fn new(ext: &QuadExtSpec, n: usize) -> Result<TableQuad> {
        let base = &ext.base;
        if n == 0 || n > base.prec {
            return Err(Error::BadRing(format!("table ring level {n}")));
        }
        let size_f = (base.q as u128).pow(n as u32);
        let size = size_f * size_f;
        if size > MAX_TABLE as u128 {
            return Err(Error::ResourceGuard(format!("scalar table of size {size}")));
        }
        let (size, size_f) = (size as u32, size_f as u32);
        let mut elems = Vec::with_capacity(size as usize);
        for code in 0..size as u64 {
            elems.push(decode_quad(ext, code, n));
        }
        let mut add = vec![0u32; (size as usize) * (size as usize)];
        let mut mul = vec![0u32; (size as usize) * (size as usize)];
        let mut neg = vec![0u32; size as usize];
        let mut inv = vec![u32::MAX; size as usize];
        let mut conj = vec![0u32; size as usize];
        let mut val = vec![0u8; size as usize];
        for (i, x) in elems.iter().enumerate() {
            neg[i] = encode_quad(ext, &ext.neg(x), n) as u32;
            conj[i] = encode_quad(ext, &ext.conj(x), n) as u32;
            val[i] = ext.valuation(x).min(n) as u8;
            if ext.is_unit(x) {
                inv[i] = encode_quad(ext, &ext.invert_unit(x)?, n) as u32;
            }
            for (j, y) in elems.iter().enumerate() {
                add[i * size as usize + j] = encode_quad(ext, &ext.add(x, y), n) as u32;
                mul[i * size as usize + j] = encode_quad(ext, &ext.mul(x, y), n) as u32;
            }
        }
        let one = encode_quad(ext, &ext.one(), n) as u32;
        Ok(TableQuad {
            ext: ext.clone(),
            n,
            size,
            size_f,
            add,
            mul,
            neg,
            inv,
            conj,
            val,
            one,
        })
    }

    pub fn encode(&self, x: &QuadElem) -> u32 {
        encode_quad(&self.ext, &self.ext.truncate(x, self.n), self.n) as u32
    }

    pub fn decode(&self, c: u32) -> QuadElem {
        decode_quad(&self.ext, c as u64, self.n)
    }

    pub fn s_conj(&self, a: u32) -> u32 {
        self.conj[a as usize]
    }

    /// Embedding of a base-ring code.
    pub fn embed_f(&self, c: u32) -> u32 {
        c
    }
}

impl ScalarTable for TableQuad {
    fn size(&self) -> u32 {
        self.size
    }
    fn s_add(&self, a: u32, b: u32) -> u32 {
        self.add[a as usize * self.size as usize + b as usize]
    }
    fn s_mul(&self, a: u32, b: u32) -> u32 {
        self.mul[a as usize * self.size as usize + b as usize]
    }
    fn s_neg(&self, a: u32) -> u32 {
        self.neg[a as usize]
    }
    fn s_inv(&self, a: u32) -> u32 {
        self.inv[a as usize]
    }
    fn s_val(&self, a: u32) -> u8 {
        self.val[a as usize]
    }
    fn s_one(&self) -> u32 {
        self.one
    }
}

pub type Mat = [u32; 4];

pub fn mat_mul<T: ScalarTable>(s: &T, x: Mat, y: Mat) -> Mat {
    [
        s.s_add(s.s_mul(x[0], y[0]), s.s_mul(x[1], y[2])),
        s.s_add(s.s_mul(x[0], y[1]), s.s_mul(x[1], y[3])),
        s.s_add(s.s_mul(x[2], y[0]), s.s_mul(x[3], y[2])),
        s.s_add(s.s_mul(x[2], y[1]), s.s_mul(x[3], y[3])),
    ]
}

pub fn mat_det<T: ScalarTable>(s: &T, x: Mat) -> u32 {
    s.s_sub(s.s_mul(x[0], x[3]), s.s_mul(x[1], x[2]))
}

pub fn mat_inv<T: ScalarTable>(s: &T, x: Mat) -> Result<Mat> {
    let di = s.s_inv(mat_det(s, x));
    if di == u32::MAX {
        return Err(Error::NotInvertible("matrix with non-unit determinant".into()));
    }
    Ok([
        s.s_mul(di, x[3]),
        s.s_mul(di, s.s_neg(x[1])),
        s.s_mul(di, s.s_neg(x[2])),
        s.s_mul(di, x[0]),
    ])
}

pub fn mat_id<T: ScalarTable>(s: &T) -> Mat {
    [s.s_one(), s.s_zero(), s.s_zero(), s.s_one()]
}

fn mat_key(m: Mat) -> u64 {
    debug_assert!(m.iter().all(|&c| c < 1 << 16));
    (m[0] as u64) | ((m[1] as u64) << 16) | ((m[2] as u64) << 32) | ((m[3] as u64) << 48)
}

/// A finite matrix group: sorted key list with aligned matrices, so element
/// indices are deterministic and lookup is a binary search.
#[derive(Debug, Clone)]
pub struct MatGroup<T: ScalarTable> {
    pub scal: T,
    keys: Vec<u64>,
    pub mats: Vec<Mat>,
}

impl<T: ScalarTable> MatGroup<T> {
    fn from_elements(scal: T, mut mats: Vec<Mat>) -> Result<MatGroup<T>> {
        if mats.len() > MAX_GROUP {
            return Err(Error::ResourceGuard(format!("group of size {}", mats.len())));
        }
        mats.sort_unstable_by_key(|&m| mat_key(m));
        let keys: Vec<u64> = mats.iter().map(|&m| mat_key(m)).collect();
        if keys.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Internal("duplicate element in group enumeration".into()));
        }
        Ok(MatGroup { scal, keys, mats })
    }

    pub fn size(&self) -> usize {
        self.keys.len()
    }

    pub fn find(&self, m: Mat) -> Result<u32> {
        self.keys
            .binary_search(&mat_key(m))
            .map(|i| i as u32)
            .map_err(|_| Error::Internal("matrix outside group".into()))
    }

    pub fn mat(&self, i: u32) -> Mat {
        self.mats[i as usize]
    }

    pub fn id_idx(&self) -> u32 {
        self.find(mat_id(&self.scal)).expect("identity present")
    }

    pub fn mul_idx(&self, a: u32, b: u32) -> u32 {
        self.find(mat_mul(&self.scal, self.mat(a), self.mat(b)))
            .expect("group closed under product")
    }

    pub fn inv_idx(&self, a: u32) -> u32 {
        self.find(mat_inv(&self.scal, self.mat(a)).expect("group element invertible"))
            .expect("group closed under inverse")
    }
}

/// `SL2(O/P^n)`, enumerated row by row: for every bottom row generating the
/// unit ideal the top rows form a single coset of the additive group.
pub fn sl2_group(scal: TableRing) -> Result<MatGroup<TableRing>> {
    let size = scal.size;
    let mut mats = Vec::new();
    for c in 0..size {
        for d in 0..size {
            if !scal.is_unit(c) && !scal.is_unit(d) {
                continue;
            }
            if scal.is_unit(d) {
                let dinv = scal.s_inv(d);
                for b in 0..size {
                    // a = (1 + b c) / d
                    let a = scal.s_mul(scal.s_add(scal.s_one(), scal.s_mul(b, c)), dinv);
                    mats.push([a, b, c, d]);
                }
            } else {
                let cinv = scal.s_inv(c);
                for a in 0..size {
                    // b = (a d - 1) / c
                    let b = scal.s_mul(scal.s_sub(scal.s_mul(a, d), scal.s_one()), cinv);
                    mats.push([a, b, c, d]);
                }
            }
        }
    }
    MatGroup::from_elements(scal, mats)
}

/// The reduction of `U(1,1)(O)` modulo `P^n`, with respect to the hermitian
/// form `antidiag(1, 1)`. Every element factors uniquely as a determinant-one
/// element times `diag(t, conj(t)^{-1})` with `t` ranging over unit coset
/// representatives modulo `O_F^x`, and the determinant-one part is the image
/// of `SL2(O_F)` under conjugating the off-diagonal entries into `sqrt(eps)`
/// multiples.
pub fn u11_group(scal: TableQuad) -> Result<MatGroup<TableQuad>> {
    let f_ring = TableRing::new(&scal.ext.base, scal.n)?;
    let sl2 = sl2_group(f_ring)?;
    let treps = u11_torus_reps(&scal);
    let mut mats = Vec::with_capacity(sl2.size() * treps.len());
    for m in &sl2.mats {
        let su = su_embed(&scal, *m);
        for &t in &treps {
            let diag = u11_diag(&scal, t);
            mats.push(mat_mul(&scal, su, diag));
        }
    }
    MatGroup::from_elements(scal, mats)
}

/// Image of an `SL2(O_F)` matrix inside the determinant-one unitary group:
/// `(a, b; c, d) -> (a, b w; (c/eps) w, d)` where `w = sqrt(eps)`.
pub fn su_embed(scal: &TableQuad, m: Mat) -> Mat {
    let ext = &scal.ext;
    let w = scal.encode(&ext.sqrt_eps());
    let eps_inv = scal.s_inv(scal.encode(&ext.embed(&ext.eps_f)));
    debug_assert_ne!(eps_inv, u32::MAX);
    let emb = |c: u32| {
        scal.encode(&ext.embed(&decode_relem(&ext.base, c as u64, scal.n)))
    };
    [
        emb(m[0]),
        scal.s_mul(emb(m[1]), w),
        scal.s_mul(scal.s_mul(emb(m[2]), eps_inv), w),
        emb(m[3]),
    ]
}

/// `diag(t, conj(t)^{-1})`.
pub fn u11_diag(scal: &TableQuad, t: u32) -> Mat {
    [t, 0, 0, scal.s_inv(scal.s_conj(t))]
}

/// Coset representatives for `O_E^x / O_F^x` at the table precision.
pub fn u11_torus_reps(scal: &TableQuad) -> Vec<u32> {
    let mut seen = vec![false; scal.size as usize];
    let mut reps = Vec::new();
    for t in 0..scal.size {
        if seen[t as usize] || !scal.is_unit(t) {
            continue;
        }
        reps.push(t);
        for u in 0..scal.size_f {
            let uf = scal.embed_f(u);
            if scal.is_unit(uf) {
                seen[scal.s_mul(t, uf) as usize] = true;
            }
        }
    }
    reps
}

/// Additive generators of `O/P^n`: single-digit elements with prime-field
/// digit values.
fn additive_gens(ring: &RingSpec, n: usize) -> Vec<RElem> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..ring.f {
            let mut d = vec![0u64; n];
            d[i] = ring.p.pow(j);
            out.push(RElem { digits: d });
        }
    }
    out
}

/// The upper-triangular subgroup of `SL2(O/P^n)` with its torus labels
/// `(matrix index, (1,1)-entry code)`.
pub fn sl2_borel(g: &MatGroup<TableRing>) -> Result<Vec<(u32, u32)>> {
    let s = &g.scal;
    let mut out = Vec::new();
    for t in 0..s.size {
        if !s.is_unit(t) {
            continue;
        }
        let ti = s.s_inv(t);
        for b in 0..s.size {
            out.push((g.find([t, b, 0, ti])?, t));
        }
    }
    Ok(out)
}

/// Membership of a congruence level: the `(2,1)` entry must vanish to order
/// `m`, and the label is the `(2,2)` entry.
pub fn km_label<T: ScalarTable>(g: &MatGroup<T>, idx: u32, m: usize) -> Option<u32> {
    let mat = g.mat(idx);
    if (g.scal.s_val(mat[2]) as usize) >= m {
        Some(mat[3])
    } else {
        None
    }
}

/// Generators for BFS over the upper-triangular subgroup of `SL2`.
pub fn sl2_borel_gens(g: &MatGroup<TableRing>) -> Result<Vec<u32>> {
    let s = &g.scal;
    let ring = &s.ring;
    let mut out = Vec::new();
    // torus: every unit residue lift plus a one-unit generator set is
    // overkill but tiny; just use all single-digit units and one-units
    for u in torus_unit_gens(ring, s.n) {
        let t = s.encode(&u);
        out.push(g.find([t, 0, 0, s.s_inv(t)])?);
    }
    for x in additive_gens(ring, s.n) {
        out.push(g.find([s.s_one(), s.encode(&x), 0, s.s_one()])?);
    }
    Ok(out)
}

fn torus_unit_gens(ring: &RingSpec, n: usize) -> Vec<RElem> {
    let mut out = Vec::new();
    for r in 1..ring.q {
        out.push(ring.truncate(&ring.from_residue(r), n));
    }
    for x in additive_gens(ring, n) {
        if ring.valuation(&x) > 0 {
            out.push(ring.truncate(&ring.add(&ring.one(), &x), n));
        }
    }
    out
}

/// Generators for BFS over the congruence subgroup of level `m` in `SL2`.
pub fn sl2_km_gens(g: &MatGroup<TableRing>, m: usize) -> Result<Vec<u32>> {
    let s = &g.scal;
    let ring = &s.ring;
    let mut out = sl2_borel_gens(g)?;
    for x in additive_gens(ring, s.n) {
        let shifted = ring.truncate(&ring.shift_up(&x, m), s.n);
        out.push(g.find([s.s_one(), 0, s.encode(&shifted), s.s_one()])?);
    }
    Ok(out)
}

/// Trace-zero additive generators of `O_E`: `sqrt(eps)` multiples of the
/// base-ring generators.
fn trace_zero_gens(scal: &TableQuad) -> Vec<u32> {
    let ext = &scal.ext;
    additive_gens(&ext.base, scal.n)
        .into_iter()
        .map(|x| {
            scal.encode(&QuadElem {
                a: ext.base.zero(),
                b: ext.base.truncate(&x, scal.n),
            })
        })
        .collect()
}

/// The Borel intersection in the unitary group: `(t, t a; 0, conj(t)^{-1})`
/// with `a` of trace zero. Returns `(matrix index, t code)`.
pub fn u11_borel(g: &MatGroup<TableQuad>) -> Result<Vec<(u32, u32)>> {
    let s = &g.scal;
    let mut out = Vec::new();
    let mut tz = Vec::new();
    for b in 0..s.size_f {
        tz.push(s.s_mul(scal_w(s), s.embed_f(b)));
    }
    tz.sort_unstable();
    tz.dedup();
    for t in 0..s.size {
        if !s.is_unit(t) {
            continue;
        }
        let ti = s.s_inv(s.s_conj(t));
        for &a in &tz {
            out.push((g.find([t, s.s_mul(t, a), 0, ti])?, t));
        }
    }
    Ok(out)
}

fn scal_w(s: &TableQuad) -> u32 {
    s.encode(&s.ext.sqrt_eps())
}

/// Generators for BFS over the unitary Borel intersection.
pub fn u11_borel_gens(g: &MatGroup<TableQuad>) -> Result<Vec<u32>> {
    let s = &g.scal;
    let mut out = Vec::new();
    for t in u11_unit_gens(s) {
        out.push(g.find(u11_diag(s, t))?);
    }
    for a in trace_zero_gens(s) {
        out.push(g.find([s.s_one(), a, 0, s.s_one()])?);
    }
    Ok(out)
}

fn u11_unit_gens(s: &TableQuad) -> Vec<u32> {
    // all residue units plus one-unit generators, as for the base ring
    let ext = &s.ext;
    let mut out = Vec::new();
    for a in 0..ext.base.q {
        for b in 0..ext.base.q {
            let x = QuadElem {
                a: ext.base.from_residue(a),
                b: ext.base.from_residue(b),
            };
            if ext.is_unit(&x) {
                out.push(s.encode(&x));
            }
        }
    }
    for i in 1..s.n {
        for j in 0..ext.base.f {
            for part in 0..2 {
                let mut d = vec![0u64; s.n];
                d[i] = ext.base.p.pow(j);
                let x = RElem { digits: d };
                let y = if part == 0 {
                    QuadElem {
                        a: ext.base.add(&ext.base.one(), &x),
                        b: ext.base.zero(),
                    }
                } else {
                    QuadElem {
                        a: ext.base.one(),
                        b: x,
                    }
                };
                out.push(s.encode(&y));
            }
        }
    }
    out
}

/// Generators for BFS over the level-`m` congruence subgroup of the unitary
/// group.
pub fn u11_km_gens(g: &MatGroup<TableQuad>, m: usize) -> Result<Vec<u32>> {
    let s = &g.scal;
    let mut out = u11_borel_gens(g)?;
    let pi_m = {
        let mut d = vec![0u64; s.n];
        if m < s.n {
            d[m] = 1;
        }
        s.encode(&QuadElem {
            a: RElem { digits: d },
            b: s.ext.base.zero(),
        })
    };
    for a in trace_zero_gens(s) {
        let y = s.s_mul(a, pi_m);
        out.push(g.find([s.s_one(), 0, y, s.s_one()])?);
    }
    Ok(out)
}

/// A partition of a group into double cosets.
#[derive(Debug, Clone)]
pub struct Partition {
    pub coset_of: Vec<u32>,
    pub reps: Vec<u32>,
    pub sizes: Vec<u64>,
}

/// BFS closure under left multiplication by `left_gens` and right
/// multiplication by `right_gens` (inverses are added automatically).
pub fn double_cosets<T: ScalarTable>(
    g: &MatGroup<T>,
    left_gens: &[u32],
    right_gens: &[u32],
) -> Partition {
    let mut lg: Vec<u32> = left_gens.to_vec();
    lg.extend(left_gens.iter().map(|&x| g.inv_idx(x)));
    lg.sort_unstable();
    lg.dedup();
    let mut rg: Vec<u32> = right_gens.to_vec();
    rg.extend(right_gens.iter().map(|&x| g.inv_idx(x)));
    rg.sort_unstable();
    rg.dedup();
    let n = g.size();
    let mut coset_of = vec![u32::MAX; n];
    let mut reps = Vec::new();
    let mut sizes = Vec::new();
    let mut stack = Vec::new();
    for start in 0..n as u32 {
        if coset_of[start as usize] != u32::MAX {
            continue;
        }
        let cid = reps.len() as u32;
        reps.push(start);
        let mut count = 0u64;
        coset_of[start as usize] = cid;
        stack.push(start);
        while let Some(x) = stack.pop() {
            count += 1;
            for &b in &lg {
                let y = g.mul_idx(b, x);
                if coset_of[y as usize] == u32::MAX {
                    coset_of[y as usize] = cid;
                    stack.push(y);
                }
            }
            for &k in &rg {
                let y = g.mul_idx(x, k);
                if coset_of[y as usize] == u32::MAX {
                    coset_of[y as usize] = cid;
                    stack.push(y);
                }
            }
        }
        sizes.push(count);
    }
    Partition {
        coset_of,
        reps,
        sizes,
    }
}

/// For each coset representative `r`, the pairs `(t(b), d(k))` over all `b`
/// in the Borel list with `k = r^{-1} b^{-1} r` in the level-`m` subgroup.
/// A character pair `(chi, eta)` fixes a vector supported on the coset
/// exactly when `chi(t) eta(d) = 1` on every pair.
pub fn stabilizer_pairs<T: ScalarTable>(
    g: &MatGroup<T>,
    part: &Partition,
    borel: &[(u32, u32)],
    m: usize,
) -> Vec<Vec<(u32, u32)>> {
    let mut out = Vec::with_capacity(part.reps.len());
    for &rep in &part.reps {
        let r = g.mat(rep);
        let rinv = mat_inv(&g.scal, r).expect("group element invertible");
        let mut pairs = Vec::new();
        for &(bidx, t) in borel {
            let binv = mat_inv(&g.scal, g.mat(bidx)).expect("borel element invertible");
            let k = mat_mul(&g.scal, mat_mul(&g.scal, rinv, binv), r);
            if (g.scal.s_val(k[2]) as usize) >= m {
                pairs.push((t, k[3]));
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        out.push(pairs);
    }
    out
}

/// Full value table for a fixed character pair: the exponent (mod `modulus`)
/// of the vector value at every group element, per-coset compatibility, and
/// the coset partition it refines. Left generator exponents are the
/// character values on the Borel side, right generator exponents the values
/// on the congruence side; a coset is compatible when no BFS edge forces two
/// different values on one element.
#[derive(Debug, Clone)]
pub struct ValueTable {
    pub part: Partition,
    pub modulus: u64,
    pub exps: Vec<u32>,
    pub compatible: Vec<bool>,
}

pub fn value_table<T: ScalarTable>(
    g: &MatGroup<T>,
    left_gens: &[(u32, u64)],
    right_gens: &[(u32, u64)],
    modulus: u64,
) -> ValueTable {
    let expand = |gens: &[(u32, u64)]| -> Vec<(u32, u64)> {
        let mut v: Vec<(u32, u64)> = gens.iter().map(|&(x, e)| (x, e % modulus)).collect();
        v.extend(
            gens.iter()
                .map(|&(x, e)| (g.inv_idx(x), (modulus - e % modulus) % modulus)),
        );
        v.sort_unstable();
        v.dedup();
        v
    };
    let lg = expand(left_gens);
    let rg = expand(right_gens);
    let n = g.size();
    let mut coset_of = vec![u32::MAX; n];
    let mut exps = vec![0u32; n];
    let mut reps = Vec::new();
    let mut sizes = Vec::new();
    let mut compatible = Vec::new();
    let mut stack = Vec::new();
    for start in 0..n as u32 {
        if coset_of[start as usize] != u32::MAX {
            continue;
        }
        let cid = reps.len() as u32;
        reps.push(start);
        compatible.push(true);
        let mut count = 0u64;
        coset_of[start as usize] = cid;
        exps[start as usize] = 0;
        stack.push(start);
        while let Some(x) = stack.pop() {
            count += 1;
            let ex = exps[x as usize] as u64;
            for &(b, e) in &lg {
                let y = g.mul_idx(b, x);
                let ey = ((ex + e) % modulus) as u32;
                if coset_of[y as usize] == u32::MAX {
                    coset_of[y as usize] = cid;
                    exps[y as usize] = ey;
                    stack.push(y);
                } else if exps[y as usize] != ey {
                    compatible[cid as usize] = false;
                }
            }
            for &(k, e) in &rg {
                let y = g.mul_idx(x, k);
                let ey = ((ex + e) % modulus) as u32;
                if coset_of[y as usize] == u32::MAX {
                    coset_of[y as usize] = cid;
                    exps[y as usize] = ey;
                    stack.push(y);
                } else if exps[y as usize] != ey {
                    compatible[cid as usize] = false;
                }
            }
        }
        sizes.push(count);
    }
    ValueTable {
        part: Partition {
            coset_of,
            reps,
            sizes,
        },
        modulus,
        exps,
        compatible,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local_rings::{make_quad_ext, make_ring, Backend};

    fn sl2_order(q: u64, n: u32) -> usize {
        (q.pow(3 * n - 2) * (q * q - 1)) as usize
    }

    #[test]
    fn sl2_sizes_match_closed_form() {
        for (p, f, n) in [(3u64, 1u32, 1usize), (3, 1, 2), (3, 1, 3), (5, 1, 2), (3, 2, 1)] {
            let backend = if f == 1 { Backend::Mixed } else { Backend::EqualChar };
            let ring = make_ring(backend, p, f, n).unwrap();
            let scal = TableRing::new(&ring, n).unwrap();
            let g = sl2_group(scal).unwrap();
            assert_eq!(g.size(), sl2_order(p.pow(f), n as u32));
        }
    }

    #[test]
    fn sl2_closure_and_inverses() {
        let ring = make_ring(Backend::Mixed, 3, 1, 2).unwrap();
        let g = sl2_group(TableRing::new(&ring, 2).unwrap()).unwrap();
        let id = g.id_idx();
        for a in (0..g.size() as u32).step_by(7) {
            let ai = g.inv_idx(a);
            assert_eq!(g.mul_idx(a, ai), id);
            for b in (0..g.size() as u32).step_by(11) {
                let _ = g.mul_idx(a, b); // panics if not closed
            }
        }
    }

    #[test]
    fn u11_order_matches_closed_form() {
        let ring = make_ring(Backend::Mixed, 3, 1, 2).unwrap();
        let ext = make_quad_ext(&ring).unwrap();
        for n in 1..=2usize {
            let scal = TableQuad::new(&ext, n).unwrap();
            let g = u11_group(scal).unwrap();
            assert_eq!(g.size(), 96 * 81usize.pow(n as u32 - 1));
        }
    }

    #[test]
    fn u11_elements_satisfy_unitary_relation() {
        let ring = make_ring(Backend::Mixed, 3, 1, 1).unwrap();
        let ext = make_quad_ext(&ring).unwrap();
        let scal = TableQuad::new(&ext, 1).unwrap();
        let g = u11_group(scal).unwrap();
        let s = &g.scal;
        for &m in &g.mats {
            // conj(g)^T beta g = beta with beta = antidiag(1, 1)
            let conj_t = [s.s_conj(m[0]), s.s_conj(m[2]), s.s_conj(m[1]), s.s_conj(m[3])];
            let beta = [0, s.s_one(), s.s_one(), 0];
            let lhs = mat_mul(s, mat_mul(s, conj_t, beta), m);
            assert_eq!(lhs, beta);
        }
        // exhaustive cross-check at level 1: exactly the unitary matrices
        let mut count = 0;
        for a in 0..s.size {
            for b in 0..s.size {
                for c in 0..s.size {
                    for d in 0..s.size {
                        let m = [a, b, c, d];
                        let conj_t =
                            [s.s_conj(m[0]), s.s_conj(m[2]), s.s_conj(m[1]), s.s_conj(m[3])];
                        let beta = [0, s.s_one(), s.s_one(), 0];
                        if mat_mul(s, mat_mul(s, conj_t, beta), m) == beta {
                            count += 1;
                            g.find(m).unwrap();
                        }
                    }
                }
            }
        }
        assert_eq!(count, g.size());
    }

    #[test]
    fn borel_bfs_recovers_full_borel() {
        let ring = make_ring(Backend::Mixed, 3, 1, 2).unwrap();
        let g = sl2_group(TableRing::new(&ring, 2).unwrap()).unwrap();
        let borel = sl2_borel(&g).unwrap();
        let gens = sl2_borel_gens(&g).unwrap();
        // closure of the generators equals the listed subgroup
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![g.id_idx()];
        seen.insert(g.id_idx());
        while let Some(x) = stack.pop() {
            for &b in &gens {
                for y in [g.mul_idx(b, x), g.mul_idx(g.inv_idx(b), x)] {
                    if seen.insert(y) {
                        stack.push(y);
                    }
                }
            }
        }
        let listed: std::collections::HashSet<u32> = borel.iter().map(|&(i, _)| i).collect();
        assert_eq!(seen, listed);
    }

    #[test]
    fn km_gens_generate_exactly_km() {
        let ring = make_ring(Backend::Mixed, 3, 1, 2).unwrap();
        let g = sl2_group(TableRing::new(&ring, 2).unwrap()).unwrap();
        for m in 0..=2usize {
            let gens = sl2_km_gens(&g, m).unwrap();
            let mut seen = std::collections::HashSet::new();
            let mut stack = vec![g.id_idx()];
            seen.insert(g.id_idx());
            while let Some(x) = stack.pop() {
                for &b in &gens {
                    for y in [g.mul_idx(b, x), g.mul_idx(g.inv_idx(b), x)] {
                        if seen.insert(y) {
                            stack.push(y);
                        }
                    }
                }
            }
            let direct: std::collections::HashSet<u32> = (0..g.size() as u32)
                .filter(|&i| km_label(&g, i, m).is_some())
                .collect();
            assert_eq!(seen, direct, "level {m}");
        }
    }

    #[test]
    fn double_cosets_partition_the_group() {
        let ring = make_ring(Backend::Mixed, 3, 1, 2).unwrap();
        let g = sl2_group(TableRing::new(&ring, 2).unwrap()).unwrap();
        let left = sl2_borel_gens(&g).unwrap();
        let right = sl2_km_gens(&g, 2).unwrap();
        let part = double_cosets(&g, &left, &right);
        assert_eq!(part.sizes.iter().sum::<u64>() as usize, g.size());
        for (i, &c) in part.coset_of.iter().enumerate() {
            assert!(c != u32::MAX, "element {i} unassigned");
        }
    }

    #[test]
    fn u11_km_gens_generate_exactly_km() {
        let ring = make_ring(Backend::Mixed, 3, 1, 2).unwrap();
        let ext = make_quad_ext(&ring).unwrap();
        let g = u11_group(TableQuad::new(&ext, 2).unwrap()).unwrap();
        for m in [1usize, 2] {
            let gens = u11_km_gens(&g, m).unwrap();
            let mut seen = std::collections::HashSet::new();
            let mut stack = vec![g.id_idx()];
            seen.insert(g.id_idx());
            while let Some(x) = stack.pop() {
                for &b in &gens {
                    for y in [g.mul_idx(b, x), g.mul_idx(g.inv_idx(b), x)] {
                        if seen.insert(y) {
                            stack.push(y);
                        }
                    }
                }
            }
            let direct: std::collections::HashSet<u32> = (0..g.size() as u32)
                .filter(|&i| km_label(&g, i, m).is_some())
                .collect();
            assert_eq!(seen, direct, "level {m}");
        }
    }
}
