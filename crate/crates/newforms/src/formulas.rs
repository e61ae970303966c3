//! Closed-form dimension tables, conductors, depths, and genericity
//! assignments for every family the brute-force modules can build, plus the
//! families (higher level, higher conductor) that are out of enumeration
//! range. These are the reference values the finite computations are
//! compared against.

use crate::error::{Error, Result};
pub use crate::supercuspidal::Tower;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Member {
    One,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sc4Member {
    Pi1,
    Pi1Prime,
    Pi2,
    Pi2Prime,
}

/// A representation family reduced to the invariants the closed forms
/// consume: conductors, levels, parity flags, packet-member labels. No
/// actual representation data is carried, so levels out of brute-force
/// range are still tabulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReprDescriptor {
    /// irreducible unramified principal series of the two-by-two group
    UnramPs,
    Steinberg,
    /// irreducible ramified principal series; `chi_sq_trivial` marks the
    /// square of the inducing character trivial on units, only supported
    /// together with conductor one
    RamPs { c: usize, chi_sq_trivial: bool },
    /// member of the packet attached to a ramified quadratic extension
    RamPacketMember { member: Member },
    /// member of the packet attached to the unramified quadratic
    /// extension; member one carries the hyperspecial-fixed vector
    UnramPacketMember { member: Member },
    /// member of a two-element unramified supercuspidal packet of level l
    ScUnram2 { l: usize, member: Member },
    /// member of the four-element unramified supercuspidal packet (level 1)
    ScUnram4 { member: Sc4Member },
    /// member of a ramified supercuspidal packet of level l
    ScRam { l: usize, member: Member },
    /// generic irreducible unitary principal series of conductor c
    U11Ps { c: usize },
    /// the full ramified unitary principal series whose inducing character
    /// agrees with its conjugate-inverse on units
    U11PsExceptional,
    U11Steinberg,
    /// member of an unitary principal-series packet; member one carries
    /// the standard-vertex newform
    U11PacketMember { member: Member },
    /// ramified unitary supercuspidal built over a level-l packet below
    U11ScRam { l: usize },
    /// unramified unitary supercuspidal of minimal depth rho0;
    /// `conjugate` selects the opposite-vertex partner
    U11ScUnram { rho0: usize, conjugate: bool },
}

use ReprDescriptor::*;

fn validate(d: &ReprDescriptor) -> Result<()> {
    match *d {
        RamPs { c, chi_sq_trivial } => {
            if c == 0 {
                return Err(Error::Incompatible("ramified family needs conductor >= 1".into()));
            }
            if chi_sq_trivial && c != 1 {
                return Err(Error::Incompatible(
                    "square-trivial inducing characters are only tabulated at conductor one".into(),
                ));
            }
        }
        ScUnram2 { l, .. } | ScRam { l, .. } | U11ScRam { l } => {
            if l == 0 {
                return Err(Error::Incompatible("level must be at least one".into()));
            }
        }
        _ => {}
    }
    Ok(())
}

fn ceil_half(x: i64) -> usize {
    if x <= 0 {
        0
    } else {
        ((x + 1) / 2) as usize
    }
}

pub fn dim_formula(d: &ReprDescriptor, m: usize, tower: Tower) -> Result<usize> {
    validate(d)?;
    let mi = m as i64;
    Ok(match *d {
        UnramPs => {
            if m == 0 {
                1
            } else {
                2 * m
            }
        }
        Steinberg => {
            if m == 0 {
                0
            } else {
                2 * m - 1
            }
        }
        RamPs { c, chi_sq_trivial } => {
            if chi_sq_trivial {
                2 * m
            } else if m >= c {
                2 * (m - c) + 1
            } else {
                0
            }
        }
        RamPacketMember { .. } => m,
        UnramPacketMember { member } => {
            let principal = (member == Member::One) == (tower == Tower::K);
            if principal {
                2 * (m / 2) + 1
            } else if m == 0 {
                0
            } else {
                2 * ((m - 1) / 2) + 1
            }
        }
        ScUnram2 { l, member } => {
            if m < 2 * l {
                0
            } else {
                let x = mi - 2 * l as i64 + 1;
                // the vertex carrying the larger space alternates with the
                // parity of the level
                let big_on_k = (l % 2 == 0) == (member == Member::One);
                if (tower == Tower::K) == big_on_k {
                    2 * ceil_half(x)
                } else {
                    2 * (x as usize / 2)
                }
            }
        }
        ScUnram4 { member } => {
            if m < 2 {
                0
            } else {
                let primed = matches!(member, Sc4Member::Pi1Prime | Sc4Member::Pi2Prime);
                if (tower == Tower::K) == primed {
                    ceil_half(mi - 1)
                } else {
                    (m - 1) / 2
                }
            }
        }
        ScRam { l, .. } => {
            if m >= 2 * l + 1 {
                m - 2 * l
            } else {
                0
            }
        }
        U11Ps { c } => (mi - c as i64 + 1).max(0) as usize,
        U11PsExceptional => {
            if m == 0 {
                0
            } else {
                m + 1
            }
        }
        U11Steinberg => m,
        U11PacketMember { member } => {
            if (member == Member::One) == (tower == Tower::K) {
                ceil_half(mi + 1)
            } else {
                ceil_half(mi)
            }
        }
        U11ScRam { l } => (mi - (2 * l + 1) as i64 + 1).max(0) as usize,
        U11ScUnram { rho0, conjugate } => {
            let c = 2 * rho0 as i64 + 2;
            let big_on_k = (rho0 % 2 == 1) == !conjugate;
            if (tower == Tower::K) == big_on_k {
                ceil_half(mi - c + 1)
            } else {
                ceil_half(mi - c - 1)
            }
        }
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConductorData {
    pub conductor: usize,
    pub achieving_eta: String,
    /// dimension of the space of newforms at the conductor, on whichever
    /// vertex achieves it
    pub newform_dim: usize,
}

fn first_nonzero_level(d: &ReprDescriptor) -> Result<(usize, usize)> {
    let bound = match *d {
        ScUnram2 { l, .. } | ScRam { l, .. } | U11ScRam { l } => 2 * l + 4,
        U11ScUnram { rho0, .. } => 2 * rho0 + 6,
        RamPs { c, .. } | U11Ps { c } => c + 2,
        _ => 4,
    };
    for m in 0..=bound {
        let dk = dim_formula(d, m, Tower::K)?;
        let dkp = dim_formula(d, m, Tower::KPrime)?;
        if dk > 0 || dkp > 0 {
            return Ok((m, dk.max(dkp)));
        }
    }
    Err(Error::Internal("dimension table identically zero".into()))
}

pub fn conductor_formula(d: &ReprDescriptor) -> Result<ConductorData> {
    validate(d)?;
    let (conductor, newform_dim) = first_nonzero_level(d)?;
    let achieving_eta = match *d {
        UnramPs | UnramPacketMember { .. } | Steinberg => {
            "the trivial character of the units".to_string()
        }
        RamPs { .. } => "the inducing character or its inverse, restricted to the units".to_string(),
        RamPacketMember { .. } => {
            "the quadratic character attached to the ramified extension".to_string()
        }
        ScUnram2 { l, .. } => format!(
            "any character matching the central sign at -1 with conductor exponent at most {l}"
        ),
        ScUnram4 { .. } | ScRam { l: 1, .. } => {
            "any character matching the central sign at -1 with conductor exponent at most 1"
                .to_string()
        }
        ScRam { l, .. } => format!(
            "any character matching the central sign at -1 with conductor exponent at most {l}"
        ),
        U11Ps { .. } | U11PsExceptional | U11Steinberg | U11PacketMember { .. } => {
            "the inducing character or its conjugate-inverse, restricted to the quadratic units"
                .to_string()
        }
        U11ScRam { l } => format!(
            "any extension of the central character with base conductor exponent at most {l}"
        ),
        U11ScUnram { rho0, .. } => format!(
            "any extension of the central character with base conductor exponent at most {}",
            rho0 + 1
        ),
    };
    Ok(ConductorData { conductor, achieving_eta, newform_dim })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepthRelation {
    /// twice the depth, so that half-integral depths stay integral
    pub depth_twice: usize,
    pub conductor: usize,
    /// conductor of the minimal representation of the containing group
    /// with the same restriction; equal to the conductor here
    pub ambient_conductor: usize,
}

pub fn depth_relations(d: &ReprDescriptor) -> Result<DepthRelation> {
    validate(d)?;
    let (c, _) = first_nonzero_level(d)?;
    let depth_twice = match *d {
        UnramPs | Steinberg | RamPs { .. } | RamPacketMember { .. } | UnramPacketMember { .. } => {
            2 * c.saturating_sub(1)
        }
        ScUnram2 { .. } | ScUnram4 { .. } | ScRam { .. } => c.saturating_sub(2),
        U11ScRam { .. } | U11ScUnram { .. } => c - 2,
        U11Ps { .. } | U11PsExceptional | U11Steinberg | U11PacketMember { .. } => {
            return Err(Error::Incompatible(
                "depth is tabulated only for supercuspidal unitary families".into(),
            ))
        }
    };
    Ok(DepthRelation { depth_twice, conductor: c, ambient_conductor: c })
}

/// Which packet member is generic for each additive-character class. The
/// classes are labelled by the coset of the twisting scalar: "1", "eps",
/// "pi", "eps*pi".
pub fn genericity_assignment(d: &ReprDescriptor) -> Result<Vec<(&'static str, &'static str)>> {
    validate(d)?;
    Ok(match *d {
        RamPacketMember { .. } | ScRam { .. } => {
            vec![("1", "member 1"), ("eps", "member 2")]
        }
        UnramPacketMember { .. } => vec![
            ("1", "member 1"),
            ("eps", "member 1"),
            ("pi", "member 2"),
            ("eps*pi", "member 2"),
        ],
        ScUnram2 { l, .. } => {
            if l % 2 == 0 {
                vec![
                    ("1", "member 1"),
                    ("eps", "member 1"),
                    ("pi", "member 2"),
                    ("eps*pi", "member 2"),
                ]
            } else {
                vec![
                    ("1", "member 2"),
                    ("eps", "member 2"),
                    ("pi", "member 1"),
                    ("eps*pi", "member 1"),
                ]
            }
        }
        ScUnram4 { .. } => vec![
            ("1", "pi1'"),
            ("pi", "pi1"),
            ("eps", "pi2'"),
            ("eps*pi", "pi2"),
        ],
        U11PacketMember { .. } => vec![("1", "member 1"), ("pi", "member 2")],
        U11ScRam { .. } => vec![("1", "pi-bar")],
        U11ScUnram { rho0, .. } => {
            if rho0 % 2 == 1 {
                vec![("1", "pi-bar"), ("pi", "pi-bar conjugate")]
            } else {
                vec![("1", "pi-bar conjugate"), ("pi", "pi-bar")]
            }
        }
        _ => {
            return Err(Error::Incompatible(
                "genericity assignments apply to packet descriptors".into(),
            ))
        }
    })
}

/// Every descriptor within the given level and conductor bounds; used by
/// sweep-style consistency checks and the verification harness.
pub fn enumerate_descriptors(l_max: usize, c_max: usize) -> Vec<ReprDescriptor> {
    let mut out = vec![UnramPs, Steinberg, U11PsExceptional, U11Steinberg];
    for c in 1..=c_max {
        out.push(RamPs { c, chi_sq_trivial: false });
        out.push(U11Ps { c });
    }
    out.push(RamPs { c: 1, chi_sq_trivial: true });
    for member in [Member::One, Member::Two] {
        out.push(RamPacketMember { member });
        out.push(UnramPacketMember { member });
        out.push(U11PacketMember { member });
        for l in 1..=l_max {
            out.push(ScUnram2 { l, member });
            out.push(ScRam { l, member });
        }
    }
    for member in [Sc4Member::Pi1, Sc4Member::Pi1Prime, Sc4Member::Pi2, Sc4Member::Pi2Prime] {
        out.push(ScUnram4 { member });
    }
    for l in 1..=l_max {
        out.push(U11ScRam { l });
    }
    for rho0 in 0..=l_max {
        for conjugate in [false, true] {
            out.push(U11ScUnram { rho0, conjugate });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stated_example_rows() {
        assert_eq!(dim_formula(&Steinberg, 3, Tower::K).unwrap(), 5);
        assert_eq!(
            dim_formula(&ScRam { l: 1, member: Member::One }, 4, Tower::K).unwrap(),
            2
        );
        // odd minimal depth, standard vertex, at the conductor
        assert_eq!(
            dim_formula(&U11ScUnram { rho0: 1, conjugate: false }, 4, Tower::K).unwrap(),
            1
        );
        let rows: Vec<usize> = (0..4)
            .map(|m| dim_formula(&UnramPs, m, Tower::K).unwrap())
            .collect();
        assert_eq!(rows, [1, 2, 4, 6]);
        let rows: Vec<usize> = (0..3)
            .map(|m| dim_formula(&U11PsExceptional, m, Tower::K).unwrap())
            .collect();
        assert_eq!(rows, [0, 2, 3]);
        let rows: Vec<usize> = (1..4)
            .map(|m| dim_formula(&ScUnram4 { member: Sc4Member::Pi1 }, m, Tower::KPrime).unwrap())
            .collect();
        assert_eq!(rows, [0, 1, 1]);
    }

    #[test]
    fn first_nonzero_row_is_the_conductor() {
        for d in enumerate_descriptors(3, 3) {
            let cd = conductor_formula(&d).unwrap();
            for m in 0..=8usize {
                let dk = dim_formula(&d, m, Tower::K).unwrap();
                let dkp = dim_formula(&d, m, Tower::KPrime).unwrap();
                if m < cd.conductor {
                    assert_eq!((dk, dkp), (0, 0), "{d:?} m={m}");
                } else if m == cd.conductor {
                    assert!(dk.max(dkp) > 0, "{d:?}");
                    assert_eq!(dk.max(dkp), cd.newform_dim, "{d:?}");
                }
            }
        }
    }

    #[test]
    fn tower_duality_inside_packets() {
        for m in 0..=8usize {
            for l in 1..=3usize {
                let a = ScUnram2 { l, member: Member::One };
                let b = ScUnram2 { l, member: Member::Two };
                assert_eq!(
                    dim_formula(&a, m, Tower::K).unwrap(),
                    dim_formula(&b, m, Tower::KPrime).unwrap()
                );
            }
            for rho0 in 0..=3usize {
                let a = U11ScUnram { rho0, conjugate: false };
                let b = U11ScUnram { rho0, conjugate: true };
                assert_eq!(
                    dim_formula(&a, m, Tower::K).unwrap(),
                    dim_formula(&b, m, Tower::KPrime).unwrap()
                );
            }
            let a = U11PacketMember { member: Member::One };
            let b = U11PacketMember { member: Member::Two };
            assert_eq!(
                dim_formula(&a, m, Tower::K).unwrap(),
                dim_formula(&b, m, Tower::KPrime).unwrap()
            );
        }
    }

    #[test]
    fn conductor_values_and_newform_dims() {
        let cd = conductor_formula(&RamPs { c: 2, chi_sq_trivial: false }).unwrap();
        assert_eq!((cd.conductor, cd.newform_dim), (2, 1));
        let cd = conductor_formula(&U11PsExceptional).unwrap();
        assert_eq!((cd.conductor, cd.newform_dim), (1, 2));
        let cd = conductor_formula(&ScUnram4 { member: Sc4Member::Pi2 }).unwrap();
        assert_eq!((cd.conductor, cd.newform_dim), (2, 1));
        let cd = conductor_formula(&ScUnram2 { l: 1, member: Member::One }).unwrap();
        assert_eq!((cd.conductor, cd.newform_dim), (2, 2));
        let cd = conductor_formula(&UnramPacketMember { member: Member::Two }).unwrap();
        assert_eq!((cd.conductor, cd.newform_dim), (0, 1));
        let cd = conductor_formula(&U11ScRam { l: 1 }).unwrap();
        assert_eq!(cd.conductor, 3);
    }

    #[test]
    fn depth_values() {
        let d = depth_relations(&RamPs { c: 3, chi_sq_trivial: false }).unwrap();
        assert_eq!(d.depth_twice, 4);
        let d = depth_relations(&ScUnram4 { member: Sc4Member::Pi1 }).unwrap();
        assert_eq!(d.depth_twice, 0);
        let d = depth_relations(&U11ScUnram { rho0: 1, conjugate: false }).unwrap();
        assert_eq!((d.depth_twice, d.conductor, d.ambient_conductor), (2, 4, 4));
        let d = depth_relations(&ScRam { l: 1, member: Member::One }).unwrap();
        assert_eq!((d.depth_twice, d.conductor), (1, 3));
        assert!(depth_relations(&U11Steinberg).is_err());
    }

    #[test]
    fn rejects_out_of_scope_parameters() {
        assert!(dim_formula(&RamPs { c: 2, chi_sq_trivial: true }, 3, Tower::K).is_err());
        assert!(dim_formula(&ScUnram2 { l: 0, member: Member::One }, 3, Tower::K).is_err());
        assert!(genericity_assignment(&UnramPs).is_err());
    }

    #[test]
    fn formulas_match_the_induced_model_dimensions() {
        use crate::characters::{enumerate_unit_chars, unit_group};
        use crate::local_rings::{make_ring, Backend};
        use crate::supercuspidal::{
            admissible, cuspidal_character, inducing_data, mackey_dims,
        };
        let ring = make_ring(Backend::Mixed, 3, 1, 4).unwrap();
        let ug = unit_group(&ring, 1).unwrap();
        let n = 8;
        for want_split in [false, true] {
            let data = (1..n)
                .filter(|&t| (t * 3) % n != t)
                .map(|t| cuspidal_character(3, 1, t).unwrap())
                .find(|d| d.splits == want_split)
                .unwrap();
            let member = &inducing_data(&data).unwrap()[0];
            let descriptor = if want_split {
                ScUnram4 { member: Sc4Member::Pi1 }
            } else {
                ScUnram2 { l: 1, member: Member::One }
            };
            for eta in enumerate_unit_chars(&ug) {
                if !admissible(&data, &eta).unwrap() {
                    continue;
                }
                for m in 1..=4usize {
                    for tower in [Tower::K, Tower::KPrime] {
                        assert_eq!(
                            mackey_dims(member, &eta, m, tower).unwrap(),
                            dim_formula(&descriptor, m, tower).unwrap(),
                            "{descriptor:?} m={m} {tower:?}"
                        );
                    }
                }
            }
        }
    }
}
