//! Whittaker functionals and the operators that cut principal series into
//! constituents, all in exact arithmetic.
//!
//! The functional is a stabilized integral over shrinking neighborhoods of
//! the big cell: each shell at radius `j` is a finite sum of character
//! monomials, and shells vanish identically once `j` clears the conductors
//! involved, so the partial sums are eventually constant and the limit is
//! reached exactly. The intertwining operator gets the same treatment, with
//! the divergent unramified tail resummed as an exact geometric series (the
//! value of the meromorphic continuation).

use crate::characters::{decode_relem, psi_val, unit_group, QuadUnitChar, UnitChar};
use crate::cyclotomic::{CharValue, MonomialSum, QHalf, RootOfUnity};
use crate::error::{Error, Result};
use crate::groups::{mat_mul, Mat, ScalarTable, TableRing};
use crate::local_rings::{QuadElem, QuadExtSpec, RElem, RingSpec};
use crate::principal_series::{sl2_model, Sl2Model, U11Model};
use num_bigint::BigInt;
use num_rational::BigRational;

fn qh_eq(a: &QHalf, b: &QHalf) -> Result<bool> {
    Ok(a.sub(b)?.is_zero())
}

fn qh_pow(x: &QHalf, k: usize) -> Result<QHalf> {
    let mut acc = QHalf::one(x.q);
    for _ in 0..k {
        acc = acc.mul(x)?;
    }
    Ok(acc)
}

/// `1 - 1/q` as an exact rational.
fn unit_shell_volume(q: u64) -> BigRational {
    BigRational::new(BigInt::from(q - 1), BigInt::from(q))
}

fn full_prec(ring: &RingSpec, x: &RElem) -> RElem {
    let mut digits = x.digits.clone();
    digits.resize(ring.prec, 0);
    RElem { digits }
}

/// Additive character twist `psi_a(x) = psi(a x)` for `a = unit * pi^shift`;
/// the four square classes of `F^x` classify the genericity types.
#[derive(Debug, Clone)]
pub struct PsiClass {
    pub name: &'static str,
    pub unit: RElem,
    pub shift: i64,
}

pub fn psi_classes(ring: &RingSpec) -> Vec<PsiClass> {
    vec![
        PsiClass { name: "1", unit: ring.one(), shift: 0 },
        PsiClass { name: "eps", unit: ring.eps(), shift: 0 },
        PsiClass { name: "pi", unit: ring.one(), shift: 1 },
        PsiClass { name: "eps*pi", unit: ring.eps(), shift: 1 },
    ]
}

/// `psi_a(X pi^{-r})` for an integral `X`, conjugated.
fn psi_bar(ring: &RingSpec, a: &PsiClass, x: &RElem, r: usize) -> RootOfUnity {
    let arg = ring.neg(&ring.mul(&a.unit, x));
    psi_val(ring, &arg, a.shift - r as i64)
}

/// The stabilized Whittaker integral of basis vector `i` against `psi_a`.
///
/// The integral over `P^{-r}` is cut into cells `X pi^{-r} + P^{m'}`; cells
/// with `v(x) >= 0` are table lookups at `w n(x)`, the rest factor through
/// the opposite cell as `chi(x^{-1}) q^{-j} f(nbar(x^{-1}))`. Two equal
/// consecutive partial sums certify stabilization because every shell past
/// the conductor bound is a full character sum over a unit group.
pub fn whittaker_sl2(
    model: &Sl2Model,
    chi_pi: &CharValue,
    i: usize,
    a: &PsiClass,
) -> Result<QHalf> {
    let space = model.space;
    let g = &space.group;
    let ring = &g.scal.ring;
    let q = ring.q;
    let mp = space.m_prime;
    let cond = model.chi.conductor()?;
    let r_max = mp + cond + a.shift.unsigned_abs() as usize + 4;
    let one = g.scal.s_one();
    let neg_one = g.scal.s_neg(one);
    let mut prev: Option<QHalf> = None;
    let mut hits = 0usize;
    for r in 0..=r_max {
        if r + mp > ring.prec {
            return Err(Error::Precision(format!(
                "whittaker radius {r} needs precision {}",
                r + mp
            )));
        }
        let mut acc = MonomialSum::new(q);
        for x_big in ring.enumerate(r + mp) {
            let k = ring.valuation(&x_big);
            let mut v = CharValue::from_root(q, psi_bar(ring, a, &x_big, r));
            v.qpow2 -= 2 * mp as i64;
            if k >= r {
                let x = ring.shift_down(&x_big, r)?;
                let m: Mat = [0, neg_one, one, g.scal.encode(&x)];
                if let Some(root) = model.eval(i, m)? {
                    acc.push_unit(&v.mul(&CharValue::from_root(q, root)));
                }
            } else {
                let j = r - k;
                let u_inv = ring.invert_unit(&ring.shift_down(&x_big, k)?)?;
                let x_inv = ring.shift_up(&u_inv, j);
                let m: Mat = [one, 0, g.scal.encode(&x_inv), one];
                if let Some(root) = model.eval(i, m)? {
                    let chi_val = CharValue::from_root(q, model.chi.value(&u_inv)?)
                        .mul(&chi_pi.pow(j as i64));
                    let mut term = v.mul(&chi_val).mul(&CharValue::from_root(q, root));
                    term.qpow2 -= 2 * j as i64;
                    acc.push_unit(&term);
                }
            }
        }
        let s = acc.total()?;
        if let Some(p) = &prev {
            if qh_eq(p, &s)? {
                hits += 1;
                if hits >= 2 {
                    return Ok(s);
                }
            } else {
                hits = 0;
            }
        }
        prev = Some(s);
    }
    Err(Error::Stabilization(format!(
        "whittaker sum did not stabilize within radius {r_max}"
    )))
}

/// Whittaker integral for the unitary group, with the unipotent coordinate
/// running over `F`: `n` entries are `x / sqrt(eps)` and the big-cell
/// factorization reads `w n(x/sqrt(eps)) = b(x^{-1}) nbar(sqrt(eps) x^{-1})`.
pub fn whittaker_u11(
    model: &U11Model,
    chi_pi: &CharValue,
    i: usize,
    a: &PsiClass,
) -> Result<QHalf> {
    let space = model.space;
    let g = &space.group;
    let ext = &g.scal.ext;
    let ring = &ext.base;
    let q = ring.q;
    let mp = space.m_prime;
    let cond = model.chi.conductor()?;
    let r_max = mp + cond + a.shift.unsigned_abs() as usize + 4;
    let se = ext.sqrt_eps();
    let se_inv = ext.invert_unit(&se)?;
    let w: Mat = [
        0,
        g.scal.encode(&ext.neg(&se_inv)),
        g.scal.encode(&se),
        0,
    ];
    let one = g.scal.s_one();
    let mut prev: Option<QHalf> = None;
    let mut hits = 0usize;
    for r in 0..=r_max {
        if r + mp > ring.prec {
            return Err(Error::Precision(format!(
                "whittaker radius {r} needs precision {}",
                r + mp
            )));
        }
        let mut acc = MonomialSum::new(q);
        for x_big in ring.enumerate(r + mp) {
            let k = ring.valuation(&x_big);
            let mut v = CharValue::from_root(q, psi_bar(ring, a, &x_big, r));
            v.qpow2 -= 2 * mp as i64;
            if k >= r {
                let x = ring.shift_down(&x_big, r)?;
                let b = ext.mul(&ext.embed(&x), &se_inv);
                let n: Mat = [one, g.scal.encode(&b), 0, one];
                let m = mat_mul(&g.scal, w, n);
                if let Some(root) = model.eval(i, m)? {
                    acc.push_unit(&v.mul(&CharValue::from_root(q, root)));
                }
            } else {
                let j = r - k;
                let u_inv = ring.invert_unit(&ring.shift_down(&x_big, k)?)?;
                let x_inv = ring.shift_up(&u_inv, j);
                let y = QuadElem { a: ring.zero(), b: x_inv };
                let m: Mat = [one, 0, g.scal.encode(&y), one];
                if let Some(root) = model.eval(i, m)? {
                    let chi_val =
                        CharValue::from_root(q, model.chi.value(&ext.embed(&u_inv))?)
                            .mul(&chi_pi.pow(j as i64));
                    let mut term = v.mul(&chi_val).mul(&CharValue::from_root(q, root));
                    term.qpow2 -= 2 * j as i64;
                    acc.push_unit(&term);
                }
            }
        }
        let s = acc.total()?;
        if let Some(p) = &prev {
            if qh_eq(p, &s)? {
                hits += 1;
                if hits >= 2 {
                    return Ok(s);
                }
            } else {
                hits = 0;
            }
        }
        prev = Some(s);
    }
    Err(Error::Stabilization(format!(
        "whittaker sum did not stabilize within radius {r_max}"
    )))
}

/// Rank of a matrix over the exact coefficient field, by Gaussian
/// elimination.
pub fn qh_rank(rows: &[Vec<QHalf>], q: u64) -> Result<usize> {
    let mut m: Vec<Vec<QHalf>> = rows.to_vec();
    if m.is_empty() {
        return Ok(0);
    }
    let ncols = m[0].len();
    let mut rank = 0usize;
    for col in 0..ncols {
        let Some(p) = (rank..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, p);
        let inv = m[rank][col].invert()?;
        for c in col..ncols {
            m[rank][c] = m[rank][c].mul(&inv)?;
        }
        for r in 0..m.len() {
            if r != rank && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for c in col..ncols {
                    m[r][c] = m[r][c].sub(&f.mul(&m[rank][c])?)?;
                }
            }
        }
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    let _ = q;
    Ok(rank)
}

/// Dimension of `ker(op - lambda)`.
pub fn eigen_dim(op: &[Vec<QHalf>], lambda: &QHalf) -> Result<usize> {
    let n = op.len();
    let mut m = op.to_vec();
    for i in 0..n {
        m[i][i] = m[i][i].sub(lambda)?;
    }
    Ok(n - qh_rank(&m, lambda.q)?)
}

/// Dimension of the joint eigenspace `ker(op1 - l1) ^ ker(op2 - l2)`.
pub fn joint_eigen_dim(
    op1: &[Vec<QHalf>],
    l1: &QHalf,
    op2: &[Vec<QHalf>],
    l2: &QHalf,
) -> Result<usize> {
    let n = op1.len();
    let mut stacked = Vec::with_capacity(2 * n);
    for i in 0..n {
        let mut row = op1[i].clone();
        row[i] = row[i].sub(l1)?;
        stacked.push(row);
    }
    for i in 0..n {
        let mut row = op2[i].clone();
        row[i] = row[i].sub(l2)?;
        stacked.push(row);
    }
    Ok(n - qh_rank(&stacked, l1.q)?)
}

/// Matrix of the standard intertwining operator on the isotypic space, with
/// columns indexed by basis vectors. Shells past the working precision are
/// verified against their closed form and the remaining geometric tail is
/// added exactly; this is the value of the meromorphic continuation, so the
/// unramified case requires `chi(pi) != 1`.
pub fn sl2_intertwiner(model: &Sl2Model, chi_pi: &CharValue) -> Result<Vec<Vec<QHalf>>> {
    let space = model.space;
    let g = &space.group;
    let ring = &g.scal.ring;
    let q = ring.q;
    let mp = space.m_prime;
    let n = model.dim();
    let one = g.scal.s_one();
    let neg_one = g.scal.s_neg(one);
    let unramified = model.chi.conductor()? == 0;
    if unramified && chi_pi.is_one() {
        return Err(Error::Incompatible(
            "intertwining operator has a pole at the trivial character".into(),
        ));
    }
    let units: Vec<RElem> = ring
        .enumerate(mp)
        .into_iter()
        .filter(|x| ring.is_unit(x))
        .collect();
    let ratio = chi_pi.to_qhalf();
    let tail_base = if unramified {
        QHalf::one(q)
            .sub(&ratio)?
            .invert()?
            .scale(&unit_shell_volume(q))
            .mul(&qh_pow(&ratio, mp + 2)?)?
    } else {
        QHalf::zero(q)
    };
    let mut out = vec![vec![QHalf::zero(q); n]; n];
    for (row, &coset) in model.basis.iter().enumerate() {
        let rep = space.part.reps[coset as usize];
        let rep_mat = g.mat(rep);
        for (col, _) in model.basis.iter().enumerate() {
            let mut acc = MonomialSum::new(q);
            for x in ring.enumerate(mp) {
                let m = mat_mul(&g.scal, [0, neg_one, one, g.scal.encode(&x)], rep_mat);
                if let Some(root) = model.eval(col, m)? {
                    let mut v = CharValue::from_root(q, root);
                    v.qpow2 -= 2 * mp as i64;
                    acc.push_unit(&v);
                }
            }
            let mut total = acc.total()?;
            // the value of f_col at the representative itself, which drives
            // every shell past the working precision
            let f_here = model
                .eval_idx(col, rep)?
                .map(|r| CharValue::from_root(q, r).to_qhalf())
                .unwrap_or_else(|| QHalf::zero(q));
            for j in 1..=mp + 1 {
                let mut shell = MonomialSum::new(q);
                let pi_j = ring.shift_up(&ring.one(), j);
                for u in &units {
                    let y = ring.mul(u, &pi_j);
                    let m = mat_mul(&g.scal, [one, 0, g.scal.encode(&y), one], rep_mat);
                    if let Some(root) = model.eval(col, m)? {
                        let mut v = CharValue::from_root(q, model.chi.value(u)?)
                            .mul(&chi_pi.pow(j as i64))
                            .mul(&CharValue::from_root(q, root));
                        v.qpow2 -= 2 * mp as i64;
                        shell.push_unit(&v);
                    }
                }
                let s = shell.total()?;
                if j >= mp {
                    // from here on the opposite cell is trivial on the
                    // table, so the shell must equal its closed form
                    let expect = if unramified {
                        qh_pow(&ratio, j)?
                            .scale(&unit_shell_volume(q))
                            .mul(&f_here)?
                    } else {
                        QHalf::zero(q)
                    };
                    if !qh_eq(&s, &expect)? {
                        return Err(Error::Internal(
                            "intertwining shell disagrees with closed form".into(),
                        ));
                    }
                }
                total = total.add(&s)?;
            }
            if unramified {
                total = total.add(&tail_base.mul(&f_here)?)?;
            }
            out[row][col] = total;
        }
    }
    Ok(out)
}

/// Outcome of splitting a reducible principal series at one level of the
/// standard filtration. Member 1 is the summand whose Whittaker functional
/// for the untwisted `psi` is nonzero.
#[derive(Debug)]
pub struct PacketSplit {
    pub dim1: usize,
    pub dim2: usize,
    /// Which member carries each additive square class, in `psi_classes`
    /// order; `None` when the functional vanishes on the whole space.
    pub member_of_class: [Option<u8>; 4],
    /// The traceless reflection of the intertwining operator, present when a
    /// spectral split was needed; member 1 is its `mu`-eigenspace.
    pub op: Option<Vec<Vec<QHalf>>>,
    pub mu: Option<QHalf>,
}

fn lambda_vector(model: &Sl2Model, chi_pi: &CharValue, a: &PsiClass) -> Result<Vec<QHalf>> {
    (0..model.dim())
        .map(|i| whittaker_sl2(model, chi_pi, i, a))
        .collect()
}

fn row_times(v: &[QHalf], m: &[Vec<QHalf>]) -> Result<Vec<QHalf>> {
    let n = v.len();
    let mut out = vec![QHalf::zero(v[0].q); n];
    for (c, o) in out.iter_mut().enumerate() {
        for (r, vr) in v.iter().enumerate() {
            *o = o.add(&vr.mul(&m[r][c])?)?;
        }
    }
    Ok(out)
}

/// Splits `pi(chi)` with `chi = chi^{-1}` into its two summands on the
/// level-`m` isotypic space: the intertwining operator supplies the
/// spectral projection and the Whittaker functionals decide which
/// eigenvalue is which member.
pub fn sl2_packet_split(model: &Sl2Model, chi_pi: &CharValue) -> Result<PacketSplit> {
    let q = model.space.group.scal.ring.q;
    if !model.chi.mul(&model.chi).ch.is_trivial(&model.chi.group.grp)
        || !chi_pi.mul(chi_pi).is_one()
    {
        return Err(Error::Incompatible(
            "packet split needs a character of order dividing two".into(),
        ));
    }
    let n = model.dim();
    let classes = psi_classes(&model.space.group.scal.ring);
    if n == 0 {
        return Ok(PacketSplit {
            dim1: 0,
            dim2: 0,
            member_of_class: [None; 4],
            op: None,
            mu: None,
        });
    }
    let lambdas: Vec<Vec<QHalf>> = classes
        .iter()
        .map(|a| lambda_vector(model, chi_pi, a))
        .collect::<Result<_>>()?;
    let nonzero: Vec<bool> = lambdas
        .iter()
        .map(|l| l.iter().any(|x| !x.is_zero()))
        .collect();
    let a_mat = sl2_intertwiner(model, chi_pi)?;
    // quadratic relation a^2 = s a + t
    let mut a2 = vec![vec![QHalf::zero(q); n]; n];
    for r in 0..n {
        for c in 0..n {
            for k in 0..n {
                a2[r][c] = a2[r][c].add(&a_mat[r][k].mul(&a_mat[k][c])?)?;
            }
        }
    }
    let off = (0..n)
        .flat_map(|r| (0..n).map(move |c| (r, c)))
        .find(|&(r, c)| r != c && !a_mat[r][c].is_zero());
    let st = if let Some((r, c)) = off {
        let s = a2[r][c].div(&a_mat[r][c])?;
        let t = a2[r][r].sub(&s.mul(&a_mat[r][r])?)?;
        Some((s, t))
    } else {
        let distinct = (0..n)
            .flat_map(|r| (0..n).map(move |c| (r, c)))
            .find(|&(r, c)| r < c && !qh_eq(&a_mat[r][r], &a_mat[c][c]).unwrap_or(false));
        distinct.map(|(r, c)| {
            let s = a_mat[r][r].add(&a_mat[c][c]).expect("same q");
            let t = a_mat[r][r].mul(&a_mat[c][c]).expect("same q").neg();
            (s, t)
        })
    };
    let Some((s, t)) = st else {
        // the operator is scalar: only one member is present at this level
        let member1 = nonzero[0];
        if !nonzero.iter().any(|&b| b) {
            return Err(Error::Internal(
                "no Whittaker functional separates a scalar intertwiner".into(),
            ));
        }
        let mut member_of_class = [None; 4];
        for (a, &nz) in nonzero.iter().enumerate() {
            if nz {
                member_of_class[a] = Some(if member1 { 1 } else { 2 });
            }
        }
        return Ok(PacketSplit {
            dim1: if member1 { n } else { 0 },
            dim2: if member1 { 0 } else { n },
            member_of_class,
            op: None,
            mu: None,
        });
    };
    for r in 0..n {
        for c in 0..n {
            let mut rhs = s.mul(&a_mat[r][c])?;
            if r == c {
                rhs = rhs.add(&t)?;
            }
            if !qh_eq(&a2[r][c], &rhs)? {
                return Err(Error::Internal(
                    "intertwining operator fails its quadratic relation".into(),
                ));
            }
        }
    }
    // reflection b = 2a - s, with b^2 scalar; eigenvalue ratios come from
    // the Whittaker functionals without extracting any square root
    let mut b = a_mat.clone();
    for r in 0..n {
        for c in 0..n {
            b[r][c] = b[r][c].scale(&BigRational::from(BigInt::from(2)));
            if r == c {
                b[r][c] = b[r][c].sub(&s)?;
            }
        }
    }
    let mut ratios: [Option<QHalf>; 4] = [None, None, None, None];
    for (a, l) in lambdas.iter().enumerate() {
        if !nonzero[a] {
            continue;
        }
        let lb = row_times(l, &b)?;
        let k = l.iter().position(|x| !x.is_zero()).expect("nonzero vector");
        let c = lb[k].div(&l[k])?;
        for i in 0..n {
            if !qh_eq(&lb[i], &c.mul(&l[i])?)? {
                return Err(Error::Internal(
                    "Whittaker functional is not an eigenvector of the reflection".into(),
                ));
            }
        }
        ratios[a] = Some(c);
    }
    let Some(mu) = ratios[0].clone() else {
        return Err(Error::Internal(
            "untwisted Whittaker functional vanished on a split space".into(),
        ));
    };
    if mu.is_zero() {
        return Err(Error::Internal("reflection eigenvalue degenerates".into()));
    }
    let dim1 = eigen_dim(&b, &mu)?;
    let dim2 = eigen_dim(&b, &mu.neg())?;
    if dim1 + dim2 != n {
        return Err(Error::Internal(
            "reflection eigenspaces do not fill the isotypic space".into(),
        ));
    }
    let mut member_of_class = [None; 4];
    for (a, r) in ratios.iter().enumerate() {
        if let Some(c) = r {
            if qh_eq(c, &mu)? {
                member_of_class[a] = Some(1);
            } else if qh_eq(c, &mu.neg())? {
                member_of_class[a] = Some(2);
            } else {
                return Err(Error::Internal(
                    "Whittaker eigenvalue is not a reflection eigenvalue".into(),
                ));
            }
        }
    }
    Ok(PacketSplit {
        dim1,
        dim2,
        member_of_class,
        op: Some(b),
        mu: Some(mu),
    })
}

/// Matrix of conjugation by `diag(eps_E, s(eps_E)^{-1})` on the level-`m`
/// isotypic space of the restricted principal series: the entry-wise map
/// `g -> (a, b/eps; c eps, d)` scaled by `chi_bar(eps_E)`. Its
/// `eta_bar(s(eps_E)^{-1})`-eigenspace is exactly the unitary-group
/// isotypic subspace.
pub fn theta_matrix(
    model: &Sl2Model,
    ext: &QuadExtSpec,
    chi_bar: &QuadUnitChar,
) -> Result<Vec<Vec<QHalf>>> {
    let space = model.space;
    let g = &space.group;
    let ring = &g.scal.ring;
    let q = ring.q;
    let n = model.dim();
    let eps = g.scal.encode(&ring.eps());
    let eps_inv = g.scal.s_inv(eps);
    let scale = CharValue::from_root(q, chi_bar.value(&ext.eps_e)?).to_qhalf();
    let mut out = vec![vec![QHalf::zero(q); n]; n];
    for (row, &coset) in model.basis.iter().enumerate() {
        let rep = g.mat(space.part.reps[coset as usize]);
        let twisted: Mat = [
            rep[0],
            g.scal.s_mul(rep[1], eps_inv),
            g.scal.s_mul(rep[2], eps),
            rep[3],
        ];
        for col in 0..n {
            if let Some(root) = model.eval(col, twisted)? {
                out[row][col] = CharValue::from_root(q, root).to_qhalf().mul(&scale)?;
            }
        }
    }
    Ok(out)
}

/// The eigenvalue that cuts the unitary-group isotypic space out of the
/// restricted one.
pub fn theta_lambda(ext: &QuadExtSpec, eta_bar: &QuadUnitChar) -> Result<QHalf> {
    let arg = ext.conj(&ext.invert_unit(&ext.eps_e)?);
    Ok(CharValue::from_root(ext.base.q, eta_bar.value(&arg)?).to_qhalf())
}

/// Restriction of a character of the quadratic units to the base units, as
/// a character of the base unit group at the same level.
pub fn restrict_quad_char(chi_bar: &QuadUnitChar, ring: &RingSpec, n: usize) -> Result<UnitChar> {
    let group = unit_group(ring, n)?;
    let ext = &chi_bar.group.ext;
    let mut exps = Vec::with_capacity(group.grp.orders.len());
    for (j, &code) in group.grp.basis.iter().enumerate() {
        let x = ext.embed(&decode_relem(ring, code, n));
        let r = chi_bar.value(&x)?;
        let d = group.grp.orders[j];
        if d % r.order != 0 {
            return Err(Error::Internal(
                "restricted character value of incompatible order".into(),
            ));
        }
        exps.push((r.exp * (d / r.order)) % d);
    }
    Ok(UnitChar {
        group,
        ch: crate::characters::AbChar { exps },
    })
}

/// Per-member isotypic dimensions for the unitary-group packet, at both
/// vertices, computed as joint eigenspaces of the reflection and the theta
/// conjugation on the restricted model. Conjugating the filtration to the
/// other vertex swaps the members, so the second pair is the first one
/// reversed.
pub fn u11_packet_dims(
    model: &Sl2Model,
    ext: &QuadExtSpec,
    chi_bar: &QuadUnitChar,
    eta_bar: &QuadUnitChar,
    chi_pi: &CharValue,
) -> Result<((usize, usize), (usize, usize))> {
    let split = sl2_packet_split(model, chi_pi)?;
    let theta = theta_matrix(model, ext, chi_bar)?;
    let lambda = theta_lambda(ext, eta_bar)?;
    let (d1, d2) = match (&split.op, &split.mu) {
        (Some(b), Some(mu)) => (
            joint_eigen_dim(b, mu, &theta, &lambda)?,
            joint_eigen_dim(b, &mu.neg(), &theta, &lambda)?,
        ),
        _ => {
            let d = eigen_dim(&theta, &lambda)?;
            if split.dim1 > 0 {
                (d, 0)
            } else {
                (0, d)
            }
        }
    };
    Ok(((d1, d2), (d2, d1)))
}

/// Isotypic dimension for the opposite-vertex filtration subgroup, computed
/// directly: unknowns are the single Borel cosets of the finite quotient,
/// and every generator of the conjugated subgroup links two of them through
/// an exact Iwasawa factorization over the field.
pub fn sl2_kprime_dim(
    ring: &RingSpec,
    chi: &UnitChar,
    chi_pi: &CharValue,
    eta: &UnitChar,
    m: usize,
) -> Result<usize> {
    let q = ring.q;
    let mp = (m + 1).max(chi.conductor()?).max(eta.conductor()?).max(1);
    let scal = TableRing::new(ring, mp)?;
    let group = crate::groups::sl2_group(scal)?;
    let g = &group;
    // single-coset transport table under the left Borel action
    let modulus = chi.ch.order(&chi.group.grp);
    let mut left = Vec::new();
    for &b in &crate::groups::sl2_borel_gens(g)? {
        let t = g.mat(b)[0];
        let v = chi.value(&decode_relem(ring, t as u64, mp))?;
        debug_assert_eq!(modulus % v.order, 0);
        left.push((b, v.exp * (modulus / v.order)));
    }
    let vt = crate::groups::value_table(g, &left, &[], modulus);
    let ncos = vt.part.reps.len();

    // generators of the conjugated subgroup, as integral matrices over the
    // full-precision ring divided by pi^e
    struct Gen {
        m: [RElem; 4],
        e: usize,
        label: RootOfUnity,
    }
    let mut gens: Vec<Gen> = Vec::new();
    let zero = full_prec(ring, &ring.zero());
    let one = full_prec(ring, &ring.one());
    let pi = full_prec(ring, &ring.uniformizer());
    let ug = unit_group(ring, mp)?;
    for &code in &ug.grp.basis {
        let u = full_prec(ring, &decode_relem(ring, code, mp));
        let ui = ring.invert_unit(&u)?;
        gens.push(Gen {
            m: [u, zero.clone(), zero.clone(), ui.clone()],
            e: 0,
            label: eta.value(&ui)?,
        });
    }
    let res_gens: Vec<u64> = (0..ring.f).map(|t| ring.p.pow(t)).collect();
    for i in 0..=mp + 1 {
        for &rg in &res_gens {
            let x = full_prec(ring, &ring.shift_up(&ring.from_residue(rg), i));
            gens.push(Gen {
                m: [pi.clone(), x, zero.clone(), pi.clone()],
                e: 1,
                label: RootOfUnity::one(),
            });
        }
    }
    for i in m + 1..mp {
        for &rg in &res_gens {
            let y = full_prec(ring, &ring.shift_up(&ring.from_residue(rg), i));
            gens.push(Gen {
                m: [one.clone(), zero.clone(), y, one.clone()],
                e: 0,
                label: eta.value(&ring.one())?,
            });
        }
    }

    // union-find over single cosets, carrying exact value ratios
    let mut parent: Vec<usize> = (0..ncos).collect();
    let mut pot: Vec<CharValue> = vec![CharValue::one(q); ncos];
    let mut dead: Vec<bool> = vec![false; ncos];
    fn find(parent: &mut Vec<usize>, pot: &mut Vec<CharValue>, x: usize) -> (usize, CharValue) {
        if parent[x] == x {
            return (x, pot[x]);
        }
        let (r, pr) = find(parent, pot, parent[x]);
        parent[x] = r;
        pot[x] = pot[x].mul(&pr);
        (r, pot[x])
    }
    for c in 0..ncos {
        if !vt.compatible[c] {
            dead[c] = true;
        }
    }

    for &rep in &vt.part.reps {
        let rm = g.mat(rep);
        // full-precision lift with determinant corrected to exactly one
        let mut lift: Vec<RElem> = rm
            .iter()
            .map(|&c| full_prec(ring, &decode_relem(ring, c as u64, mp)))
            .collect();
        if ring.is_unit(&lift[3]) {
            let bc = ring.add(&ring.one(), &ring.mul(&lift[1], &lift[2]));
            lift[0] = ring.mul(&bc, &ring.invert_unit(&lift[3])?);
        } else if ring.is_unit(&lift[2]) {
            let ad = ring.sub(&ring.mul(&lift[0], &lift[3]), &ring.one());
            lift[1] = ring.mul(&ad, &ring.invert_unit(&lift[2])?);
        } else {
            return Err(Error::Internal("bottom row of a lift is not primitive".into()));
        }
        for gen in &gens {
            // product rep * gen over the field, as (integral matrix, e)
            let prod = [
                ring.add(&ring.mul(&lift[0], &gen.m[0]), &ring.mul(&lift[1], &gen.m[2])),
                ring.add(&ring.mul(&lift[0], &gen.m[1]), &ring.mul(&lift[1], &gen.m[3])),
                ring.add(&ring.mul(&lift[2], &gen.m[0]), &ring.mul(&lift[3], &gen.m[2])),
                ring.add(&ring.mul(&lift[2], &gen.m[1]), &ring.mul(&lift[3], &gen.m[3])),
            ];
            let wv = ring.valuation(&prod[2]).min(ring.valuation(&prod[3]));
            if ring.prec < wv + mp + 2 {
                return Err(Error::Precision(
                    "Iwasawa factorization ran out of digits".into(),
                ));
            }
            let cp = ring.shift_down(&prod[2], wv)?;
            let dp = ring.shift_down(&prod[3], wv)?;
            // complete the primitive bottom row to a determinant-one matrix
            let k0 = if ring.is_unit(&dp) {
                [
                    ring.invert_unit(&dp)?,
                    ring.zero(),
                    cp.clone(),
                    dp.clone(),
                ]
            } else {
                [
                    ring.zero(),
                    ring.neg(&ring.invert_unit(&cp)?),
                    cp.clone(),
                    dp.clone(),
                ]
            };
            let k0_inv = [
                k0[3].clone(),
                ring.neg(&k0[1].clone()),
                ring.neg(&k0[2].clone()),
                k0[0].clone(),
            ];
            let b11 = ring.add(
                &ring.mul(&prod[0], &k0_inv[0]),
                &ring.mul(&prod[1], &k0_inv[2]),
            );
            let b21 = ring.add(
                &ring.mul(&prod[2], &k0_inv[0]),
                &ring.mul(&prod[3], &k0_inv[2]),
            );
            if b21.digits.iter().any(|&d| d != 0) {
                return Err(Error::Internal("Iwasawa factor is not triangular".into()));
            }
            let tv = ring.valuation(&b11);
            let t_unit = ring.shift_down(&b11, tv)?;
            if t_unit.digits.len() < mp {
                return Err(Error::Precision(
                    "Iwasawa torus part has too few digits".into(),
                ));
            }
            let v_t = tv as i64 - gen.e as i64;
            let k0_mat: Mat = [
                g.scal.encode(&k0[0]),
                g.scal.encode(&k0[1]),
                g.scal.encode(&k0[2]),
                g.scal.encode(&k0[3]),
            ];
            let k0_idx = g.find(k0_mat)?;
            let j_from = vt.part.coset_of[rep as usize] as usize;
            let j_to = vt.part.coset_of[k0_idx as usize] as usize;
            // chi dlt^{1/2}(b) f(k0) = eta(gen) f(rep)
            let exp_diff = (vt.exps[rep as usize] as i64 - vt.exps[k0_idx as usize] as i64)
                .rem_euclid(modulus as i64);
            let mut ratio = CharValue::from_root(q, gen.label)
                .mul(&CharValue::from_root(q, RootOfUnity::new(modulus, exp_diff)))
                .mul(&CharValue::from_root(q, chi.value(&t_unit)?).inv())
                .mul(&chi_pi.pow(v_t).inv());
            ratio.qpow2 += 2 * v_t;
            let (ra, pa) = find(&mut parent, &mut pot, j_from);
            let (rb, pb) = find(&mut parent, &mut pot, j_to);
            // v[j_to] = ratio v[j_from]
            if ra == rb {
                if !pb.mul(&pa.mul(&ratio).inv()).is_one() {
                    dead[ra] = true;
                }
            } else {
                let da = dead[ra];
                parent[rb] = ra;
                pot[rb] = pa.mul(&ratio).mul(&pb.inv());
                dead[ra] = da || dead[rb];
            }
        }
    }
    let mut dim = 0usize;
    for c in 0..ncos {
        let (r, _) = find(&mut parent, &mut pot, c);
        if r == c && !dead[c] {
            dim += 1;
        }
    }
    // dead flags can still live on non-roots after unions; fold them in
    let mut dead_roots = vec![false; ncos];
    for c in 0..ncos {
        if dead[c] {
            let (r, _) = find(&mut parent, &mut pot, c);
            dead_roots[r] = true;
        }
    }
    let mut dim2 = 0usize;
    for c in 0..ncos {
        let (r, _) = find(&mut parent, &mut pot, c);
        if r == c && !dead_roots[c] {
            dim2 += 1;
        }
    }
    let _ = dim;
    Ok(dim2)
}

/// Convenience: the full-model dimensions split by member, for one level.
pub fn sl2_packet_level(
    ring: &RingSpec,
    chi: &UnitChar,
    chi_pi: &CharValue,
    eta: &UnitChar,
    m: usize,
) -> Result<PacketSplit> {
    let mp = m.max(chi.conductor()?).max(eta.conductor()?).max(1);
    let space = crate::principal_series::sl2_space(ring, m, mp)?;
    let model = sl2_model(&space, chi, eta)?;
    // the space borrow ends with the computation; rebuild the split outputs
    let split = sl2_packet_split(&model, chi_pi)?;
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characters::{enumerate_quad_unit_chars, enumerate_unit_chars, quad_unit_group};
    use crate::cyclotomic::lcm;
    use crate::local_rings::{make_quad_ext, make_ring, Backend};
    use crate::principal_series::{sl2_space, u11_space, u11_model};

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn spherical_whittaker_value_is_inverse_l_factor() {
        // on the full unramified principal series at level zero the
        // functional evaluates to 1 - chi(pi)/q on the spherical vector
        for backend in [Backend::Mixed, Backend::EqualChar] {
            let ring = make_ring(backend, 3, 1, 9).unwrap();
            let space = sl2_space(&ring, 0, 1).unwrap();
            let gc = unit_group(&ring, 1).unwrap();
            let chi = UnitChar::trivial(&gc);
            let eta = UnitChar::trivial(&gc);
            let model = sl2_model(&space, &chi, &eta).unwrap();
            assert_eq!(model.dim(), 1);
            for (root_exp, expect) in [(0i64, rat(2, 3)), (1, rat(4, 3))] {
                let chi_pi = CharValue::from_root(3, RootOfUnity::new(2, root_exp));
                let got = whittaker_sl2(&model, &chi_pi, 0, &psi_classes(&ring)[0]).unwrap();
                assert!(qh_eq(&got, &QHalf::from_rational(3, expect.clone())).unwrap());
            }
        }
    }

    #[test]
    fn steinberg_newform_is_a_test_vector() {
        // chi(pi) = 1/q; the kernel of the averaging functional at level one
        // is the newform line and the Whittaker functional is nonzero on it
        let ring = make_ring(Backend::Mixed, 3, 1, 9).unwrap();
        let space = sl2_space(&ring, 1, 1).unwrap();
        let gc = unit_group(&ring, 1).unwrap();
        let chi = UnitChar::trivial(&gc);
        let eta = UnitChar::trivial(&gc);
        let model = sl2_model(&space, &chi, &eta).unwrap();
        assert_eq!(model.dim(), 2);
        let chi_pi = CharValue { q: 3, root: RootOfUnity::one(), qpow2: -2 };
        let avg: Vec<QHalf> = (0..2).map(|i| model.average(i, 3).unwrap()).collect();
        let lam: Vec<QHalf> = (0..2)
            .map(|i| whittaker_sl2(&model, &chi_pi, i, &psi_classes(&ring)[0]).unwrap())
            .collect();
        // v = avg(f1) f0 - avg(f0) f1 spans the Steinberg line
        let st = avg[1].mul(&lam[0]).unwrap().sub(&avg[0].mul(&lam[1]).unwrap()).unwrap();
        assert!(!st.is_zero());
    }

    #[test]
    fn ramified_newform_is_a_test_vector() {
        let ring = make_ring(Backend::Mixed, 5, 1, 9).unwrap();
        let gc = unit_group(&ring, 1).unwrap();
        let chi = enumerate_unit_chars(&gc)
            .into_iter()
            .find(|c| c.conductor().unwrap() == 1 && !c.mul(c).ch.is_trivial(&gc.grp))
            .unwrap();
        let space = sl2_space(&ring, 1, 1).unwrap();
        let model = sl2_model(&space, &chi.inv(), &chi).unwrap();
        assert_eq!(model.dim(), 1);
        let chi_pi = CharValue::one(5);
        let got = whittaker_sl2(&model, &chi_pi, 0, &psi_classes(&ring)[0]).unwrap();
        assert!(!got.is_zero());
    }

    #[test]
    fn unramified_packet_splits_along_the_tower() {
        // chi unramified with chi(pi) = -1: member dims 2 floor(r/2) + 1 and
        // 2 floor((r-1)/2) + 1, with the untwisted classes on member one
        let ring = make_ring(Backend::Mixed, 3, 1, 10).unwrap();
        let chi_pi = CharValue::from_root(3, RootOfUnity::new(2, 1));
        let expected = [(1usize, 0usize), (1, 1), (3, 1)];
        for (m, &(d1, d2)) in expected.iter().enumerate() {
            let mp = m.max(1);
            let space = sl2_space(&ring, m, mp).unwrap();
            let gc = unit_group(&ring, mp).unwrap();
            let ge = unit_group(&ring, m.max(1)).unwrap();
            let chi = UnitChar::trivial(&gc);
            let eta = UnitChar::trivial(&ge);
            let model = sl2_model(&space, &chi, &eta).unwrap();
            let split = sl2_packet_split(&model, &chi_pi).unwrap();
            assert_eq!((split.dim1, split.dim2), (d1, d2), "m = {m}");
            if split.dim1 > 0 {
                assert_eq!(split.member_of_class[0], Some(1));
            }
            if split.dim2 > 0 {
                assert_eq!(split.member_of_class[2], Some(2));
                assert_eq!(split.member_of_class[3], Some(2));
            }
            if split.dim1 > 0 && m >= 1 {
                assert_eq!(split.member_of_class[1], Some(1));
            }
        }
    }

    #[test]
    fn ramified_packet_splits_evenly() {
        // chi the quadratic ramified character: both members have dimension
        // m, and the two unit classes land on different members
        let ring = make_ring(Backend::Mixed, 3, 1, 10).unwrap();
        for m in 1..=2usize {
            let mp = m.max(1);
            let gc = unit_group(&ring, mp).unwrap();
            let chi = crate::characters::legendre_char(&gc).unwrap();
            let ge = unit_group(&ring, m).unwrap();
            let eta = crate::characters::legendre_char(&ge).unwrap();
            let chi_pi = CharValue::one(3);
            let space = sl2_space(&ring, m, mp).unwrap();
            let model = sl2_model(&space, &chi, &eta).unwrap();
            let split = sl2_packet_split(&model, &chi_pi).unwrap();
            assert_eq!((split.dim1, split.dim2), (m, m), "m = {m}");
            assert_eq!(split.member_of_class[0], Some(1));
            assert_eq!(split.member_of_class[1], Some(2));
        }
    }

    #[test]
    fn opposite_vertex_dimensions_match_the_transport() {
        // conjugating the filtration to the other vertex preserves total
        // isotypic dimensions; the direct solver confirms it
        let ring = make_ring(Backend::Mixed, 3, 1, 12).unwrap();
        let chi_pi = CharValue::from_root(3, RootOfUnity::new(2, 1));
        for m in 0..=2usize {
            let mp = m.max(1);
            let space = sl2_space(&ring, m, mp).unwrap();
            let gc = unit_group(&ring, mp).unwrap();
            let ge = unit_group(&ring, m.max(1)).unwrap();
            let chi = UnitChar::trivial(&gc);
            let eta = UnitChar::trivial(&ge);
            let direct = sl2_kprime_dim(&ring, &chi, &chi_pi, &eta, m).unwrap();
            assert_eq!(direct, space.dim(&chi, &eta).unwrap(), "m = {m}");
        }
    }

    #[test]
    fn theta_eigenspaces_match_direct_unitary_dimensions() {
        // the theta-conjugation eigenspace inside the restricted model must
        // reproduce the directly enumerated unitary isotypic dimension, for
        // every extension of the restricted character
        let ring = make_ring(Backend::Mixed, 3, 1, 10).unwrap();
        let ext = make_quad_ext(&ring).unwrap();
        for m in 1..=2usize {
            let mp = m;
            let gq = quad_unit_group(&ext, mp).unwrap();
            let chi_bar = QuadUnitChar::trivial(&gq);
            let chi = restrict_quad_char(&chi_bar, &ring, mp).unwrap();
            let uspace = u11_space(&ext, m, mp).unwrap();
            let sspace = sl2_space(&ring, m, mp).unwrap();
            let ge = unit_group(&ring, m).unwrap();
            let gqe = quad_unit_group(&ext, m).unwrap();
            for eta_bar in enumerate_quad_unit_chars(&gqe) {
                // only extensions of the trivial base character, trivial on
                // the norm-one subgroup
                let eta = restrict_quad_char(&eta_bar, &ring, m).unwrap();
                if !eta.ch.is_trivial(&ge.grp) {
                    continue;
                }
                if !crate::principal_series::u11_central_ok(&ext, &chi_bar, &eta_bar, m).unwrap() {
                    continue;
                }
                let model = sl2_model(&sspace, &chi, &UnitChar::trivial(&ge)).unwrap();
                let theta = theta_matrix(&model, &ext, &chi_bar).unwrap();
                let lambda = theta_lambda(&ext, &eta_bar).unwrap();
                let got = eigen_dim(&theta, &lambda).unwrap();
                let want = uspace.dim(&chi_bar, &eta_bar).unwrap();
                assert_eq!(got, want, "m = {m}");
            }
        }
    }

    #[test]
    fn unitary_packet_member_dimensions() {
        // unramified chi_bar with chi_bar(pi) = -1: member dims at the
        // standard vertex are ceil((m+1)/2) and ceil(m/2), swapped at the
        // other vertex
        let ring = make_ring(Backend::Mixed, 3, 1, 10).unwrap();
        let ext = make_quad_ext(&ring).unwrap();
        let chi_pi = CharValue::from_root(3, RootOfUnity::new(2, 1));
        for m in 0..=2usize {
            let mp = m.max(1);
            let gq = quad_unit_group(&ext, mp).unwrap();
            let chi_bar = QuadUnitChar::trivial(&gq);
            let chi = restrict_quad_char(&chi_bar, &ring, mp).unwrap();
            let sspace = sl2_space(&ring, m, mp).unwrap();
            let ge = unit_group(&ring, m.max(1)).unwrap();
            let eta = UnitChar::trivial(&ge);
            let gqe = quad_unit_group(&ext, m.max(1)).unwrap();
            let eta_bar = QuadUnitChar::trivial(&gqe);
            let model = sl2_model(&sspace, &chi, &eta).unwrap();
            let (km, kpm) =
                u11_packet_dims(&model, &ext, &chi_bar, &eta_bar, &chi_pi).unwrap();
            let want1 = (m + 2) / 2;
            let want2 = (m + 1) / 2;
            assert_eq!(km, (want1, want2), "m = {m}");
            assert_eq!(kpm, (want2, want1), "m = {m}");
        }
    }

    #[test]
    fn exceptional_unitary_newform_whittaker_kernel() {
        // chi_bar ramified on the quadratic units but trivial on the base
        // units: the level-one newform space is two-dimensional and the
        // Whittaker functional vanishes on exactly a line of it
        let ring = make_ring(Backend::Mixed, 3, 1, 9).unwrap();
        let ext = make_quad_ext(&ring).unwrap();
        let gq = quad_unit_group(&ext, 1).unwrap();
        let ge = unit_group(&ring, 1).unwrap();
        let chi_bar = enumerate_quad_unit_chars(&gq)
            .into_iter()
            .find(|c| {
                !c.ch.is_trivial(&gq.grp)
                    && restrict_quad_char(c, &ring, 1).unwrap().ch.is_trivial(&ge.grp)
                    && c.mul(&c.galois().unwrap()).ch.is_trivial(&gq.grp)
            })
            .unwrap();
        let eta_bar = chi_bar.clone();
        let space = u11_space(&ext, 1, 1).unwrap();
        let model = u11_model(&space, &chi_bar, &eta_bar).unwrap();
        assert_eq!(model.dim(), 2);
        let chi_pi = CharValue::one(3);
        let lam: Vec<QHalf> = (0..2)
            .map(|i| whittaker_u11(&model, &chi_pi, i, &psi_classes(&ring)[0]).unwrap())
            .collect();
        assert!(lam.iter().any(|x| !x.is_zero()));
        // rank one as a functional: kernel is one-dimensional
        let rank = lam.iter().filter(|x| !x.is_zero()).count().min(1);
        assert_eq!(2 - rank, 1);
    }

    #[test]
    fn generic_unitary_newform_is_a_test_vector() {
        // a ramified chi_bar that stays ramified on the base units: the
        // newform space at the conductor is a line and the functional is
        // nonzero there
        let ring = make_ring(Backend::Mixed, 3, 1, 9).unwrap();
        let ext = make_quad_ext(&ring).unwrap();
        let gq = quad_unit_group(&ext, 1).unwrap();
        let ge = unit_group(&ring, 1).unwrap();
        let chi_bar = enumerate_quad_unit_chars(&gq)
            .into_iter()
            .find(|c| {
                let r = restrict_quad_char(c, &ring, 1).unwrap();
                !r.ch.is_trivial(&ge.grp)
                    && !c
                        .mul(&c.galois().unwrap().inv())
                        .ch
                        .is_trivial(&gq.grp)
            })
            .unwrap();
        let eta_bar = chi_bar.clone();
        let space = u11_space(&ext, 1, 1).unwrap();
        let model = u11_model(&space, &chi_bar, &eta_bar).unwrap();
        assert_eq!(model.dim(), 1);
        let chi_pi = CharValue::one(3);
        let got = whittaker_u11(&model, &chi_pi, 0, &psi_classes(&ring)[0]).unwrap();
        assert!(!got.is_zero());
    }

    #[test]
    fn whittaker_respects_model_modulus() {
        // sanity on a ramified model with nontrivial central data: values
        // land in the cyclotomic field of the joint modulus
        let ring = make_ring(Backend::Mixed, 5, 1, 9).unwrap();
        let gc = unit_group(&ring, 1).unwrap();
        let chi = enumerate_unit_chars(&gc)
            .into_iter()
            .find(|c| c.conductor().unwrap() == 1 && !c.mul(c).ch.is_trivial(&gc.grp))
            .unwrap();
        let space = sl2_space(&ring, 1, 1).unwrap();
        let model = sl2_model(&space, &chi, &chi.inv()).unwrap();
        let chi_pi = CharValue::one(5);
        let lam = whittaker_sl2(&model, &chi_pi, 0, &psi_classes(&ring)[1]).unwrap();
        let modulus = lcm(lam.c0.order, 5 * model.modulus);
        assert!(modulus > 0);
    }
}
