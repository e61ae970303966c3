use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use newforms::characters::{
    enumerate_quad_unit_chars, enumerate_unit_chars, legendre_char, quad_unit_group, unit_group,
    UnitChar,
};
use newforms::cyclotomic::{CharValue, RootOfUnity};
use newforms::error::{Error, Result};
use newforms::formulas::{
    conductor_formula, dim_formula, genericity_assignment, Member, ReprDescriptor, Sc4Member,
    Tower,
};
use newforms::local_rings::{make_quad_ext, make_ring, Backend, RingSpec};
use newforms::principal_series::{sl2_model, sl2_space, steinberg_dim, u11_space};
use newforms::supercuspidal::{admissible, cuspidal_character, mackey_dims, InducingDatum};
use newforms::verify::{ramified_char, run_suite, suite_checks, trivial_model_dim, u11_configs};
use newforms::whittaker::{psi_classes, sl2_packet_split, u11_packet_dims, whittaker_sl2};
use std::collections::BTreeMap;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "newforms",
    about = "Exact fixed-vector tables for principal series and supercuspidal families",
    version
)]
struct Cli {
    /// Output format: md, csv, or json
    #[arg(long, global = true)]
    format: Option<String>,
    /// Key=value defaults file; explicit flags win
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Describe a truncated local ring and its unit filtration
    RingInfo(RingArgs),
    /// List the characters of a unit group, with conductors and orders
    Chars(CharsArgs),
    /// Fixed-vector dimension table for a representation family
    DimTable(DimTableArgs),
    /// Conductor, newform dimension, and achieving characters for a family
    Conductor(FamilyArgs),
    /// Packet member dimensions and genericity assignment
    Packet(FamilyArgs),
    /// Exact Whittaker functional value on the newform line
    Whittaker(WhittakerArgs),
    /// Run the verification matrix (closed forms against finite models)
    Verify(VerifyArgs),
}

#[derive(Args)]
struct RingArgs {
    #[arg(long, default_value = "mixed")]
    backend: String,
    #[arg(long, default_value_t = 3)]
    p: u64,
    #[arg(long, default_value_t = 1)]
    f: u32,
    #[arg(long, default_value_t = 4)]
    prec: usize,
}

#[derive(Args)]
struct CharsArgs {
    #[command(flatten)]
    ring: RingArgs,
    #[arg(long, default_value_t = 1)]
    level: usize,
    /// Characters of the quadratic extension's units instead of the base
    #[arg(long)]
    quad: bool,
}

#[derive(Args)]
struct FamilyArgs {
    /// One of: unram-ps, steinberg, ram-ps, ram-packet, unram-packet,
    /// sc2, sc4, sc-ram, u11-ps, u11-exceptional, u11-steinberg,
    /// u11-packet, u11-sc-ram, u11-sc-unram
    #[arg(long)]
    family: String,
    /// Residue field size for the finite-model columns
    #[arg(long)]
    q: Option<u64>,
    /// Conductor of the inducing character, where the family has one
    #[arg(long, default_value_t = 1)]
    cchi: usize,
    /// Level of the inducing datum, for the level-parametrized families
    #[arg(long, default_value_t = 1)]
    l: usize,
    /// Packet member: 1, 2, pi1, pi1p, pi2, or pi2p
    #[arg(long, default_value = "1")]
    member: String,
    /// Minimal depth parameter for the unramified unitary supercuspidals
    #[arg(long, default_value_t = 1)]
    rho0: usize,
    #[arg(long)]
    conjugate: bool,
    /// Inducing character squares to the trivial character
    #[arg(long)]
    chi_sq_trivial: bool,
}

#[derive(Args)]
struct DimTableArgs {
    #[command(flatten)]
    fam: FamilyArgs,
    /// Inclusive level range, e.g. 0..3
    #[arg(long)]
    m: Option<String>,
    /// Tower the formula column reads from: K or Kp
    #[arg(long)]
    tower: Option<String>,
}

#[derive(Args)]
struct WhittakerArgs {
    /// unram-ps or steinberg
    #[arg(long, default_value = "unram-ps")]
    family: String,
    #[arg(long)]
    q: Option<u64>,
    /// Value of the inducing character at the uniformizer: trivial or minus
    #[arg(long, default_value = "trivial")]
    chi: String,
}

#[derive(Args)]
struct VerifyArgs {
    /// all, principal-series, packets, unitary, theta-crosscheck,
    /// whittaker, supercuspidal, formulas, or properties
    #[arg(long, default_value = "all")]
    suite: String,
    /// Restrict the report to cells at this residue field size
    #[arg(long)]
    q: Option<u64>,
    /// Restrict the report to cells at level at most this
    #[arg(long)]
    max_m: Option<usize>,
}

struct Table {
    schema: &'static str,
    headers: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn render(&self, format: &str) -> Result<String> {
        match format {
            "md" => {
                let mut out = String::new();
                out.push_str(&format!("| {} |\n", self.headers.join(" | ")));
                out.push_str(&format!(
                    "|{}\n",
                    self.headers.iter().map(|_| " --- |").collect::<String>()
                ));
                for row in &self.rows {
                    out.push_str(&format!("| {} |\n", row.join(" | ")));
                }
                Ok(out)
            }
            "csv" => {
                let mut out = format!("{}\n", self.headers.join(","));
                for row in &self.rows {
                    out.push_str(&format!("{}\n", row.join(",")));
                }
                Ok(out)
            }
            "json" => {
                let rows: Vec<serde_json::Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        self.headers
                            .iter()
                            .zip(row)
                            .map(|(h, v)| ((*h).to_string(), serde_json::Value::from(v.clone())))
                            .collect::<serde_json::Map<_, _>>()
                            .into()
                    })
                    .collect();
                let doc = serde_json::json!({ "schema": self.schema, "rows": rows });
                Ok(format!("{}\n", serde_json::to_string_pretty(&doc).expect("static schema")))
            }
            other => Err(Error::Parse(format!("unknown format '{other}'"))),
        }
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    if let Some(p) = path {
        let text = std::fs::read_to_string(p)
            .map_err(|e| Error::Parse(format!("cannot read config {}: {e}", p.display())))?;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad config line '{line}'")))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
    }
    Ok(map)
}

fn parse_range(s: &str) -> Result<(usize, usize)> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| Error::Parse(format!("range must look like 0..3, got '{s}'")))?;
    let lo: usize = a.parse().map_err(|_| Error::Parse(format!("bad range start '{a}'")))?;
    let hi: usize = b.parse().map_err(|_| Error::Parse(format!("bad range end '{b}'")))?;
    if hi < lo {
        return Err(Error::Parse(format!("empty range '{s}'")));
    }
    Ok((lo, hi))
}

fn parse_backend(s: &str) -> Result<Backend> {
    match s {
        "mixed" => Ok(Backend::Mixed),
        "equal-char" => Ok(Backend::EqualChar),
        other => Err(Error::Parse(format!("backend must be mixed or equal-char, got '{other}'"))),
    }
}

fn parse_tower(s: &str) -> Result<Tower> {
    match s {
        "K" => Ok(Tower::K),
        "Kp" => Ok(Tower::KPrime),
        other => Err(Error::Parse(format!("tower must be K or Kp, got '{other}'"))),
    }
}

impl FamilyArgs {
    fn member(&self) -> Result<Member> {
        match self.member.as_str() {
            "1" | "pi1" | "pi1p" => Ok(Member::One),
            "2" | "pi2" | "pi2p" => Ok(Member::Two),
            other => Err(Error::Parse(format!("unknown member '{other}'"))),
        }
    }

    fn sc4_member(&self) -> Result<Sc4Member> {
        match self.member.as_str() {
            "pi1" | "1" => Ok(Sc4Member::Pi1),
            "pi1p" => Ok(Sc4Member::Pi1Prime),
            "pi2" | "2" => Ok(Sc4Member::Pi2),
            "pi2p" => Ok(Sc4Member::Pi2Prime),
            other => Err(Error::Parse(format!("unknown member '{other}'"))),
        }
    }

    fn descriptor(&self) -> Result<ReprDescriptor> {
        Ok(match self.family.as_str() {
            "unram-ps" => ReprDescriptor::UnramPs,
            "steinberg" => ReprDescriptor::Steinberg,
            "ram-ps" => ReprDescriptor::RamPs {
                c: self.cchi,
                chi_sq_trivial: self.chi_sq_trivial,
            },
            "ram-packet" => ReprDescriptor::RamPacketMember { member: self.member()? },
            "unram-packet" => ReprDescriptor::UnramPacketMember { member: self.member()? },
            "sc2" => ReprDescriptor::ScUnram2 { l: self.l, member: self.member()? },
            "sc4" => ReprDescriptor::ScUnram4 { member: self.sc4_member()? },
            "sc-ram" => ReprDescriptor::ScRam { l: self.l, member: self.member()? },
            "u11-ps" => ReprDescriptor::U11Ps { c: self.cchi },
            "u11-exceptional" => ReprDescriptor::U11PsExceptional,
            "u11-steinberg" => ReprDescriptor::U11Steinberg,
            "u11-packet" => ReprDescriptor::U11PacketMember { member: self.member()? },
            "u11-sc-ram" => ReprDescriptor::U11ScRam { l: self.l },
            "u11-sc-unram" => ReprDescriptor::U11ScUnram {
                rho0: self.rho0,
                conjugate: self.conjugate,
            },
            other => return Err(Error::Parse(format!("unknown family '{other}'"))),
        })
    }
}

/// Finite-model dimensions on both towers when the family is within the
/// brute-force scope; blanks otherwise.
fn model_dims(fam: &FamilyArgs, q: u64, m: usize) -> Result<(Option<usize>, Option<usize>)> {
    if !matches!(q, 3 | 5) || m > 4 {
        return Ok((None, None));
    }
    let out = match fam.family.as_str() {
        "unram-ps" => {
            let ring = make_ring(Backend::Mixed, q, 1, m + 1)?;
            (Some(trivial_model_dim(&ring, m)?), None)
        }
        "steinberg" => {
            let ring = make_ring(Backend::Mixed, q, 1, m + 1)?;
            let mp = m.max(1);
            let space = sl2_space(&ring, m, mp)?;
            let eta = UnitChar::trivial(&unit_group(&ring, m.max(1))?);
            (Some(steinberg_dim(&space, &eta)?), None)
        }
        "ram-ps" if fam.cchi == 1 => {
            if fam.chi_sq_trivial && q != 3 || !fam.chi_sq_trivial && q == 3 {
                return Ok((None, None));
            }
            let ring = make_ring(Backend::Mixed, q, 1, m + 1)?;
            let mp = m.max(1);
            let chi = ramified_char(&ring, mp, fam.chi_sq_trivial)?;
            let eta = if m == 0 {
                UnitChar::trivial(&unit_group(&ring, 1)?)
            } else {
                ramified_char(&ring, m, fam.chi_sq_trivial)?
            };
            (Some(sl2_space(&ring, m, mp)?.dim(&chi, &eta)?), None)
        }
        "ram-packet" | "unram-packet" => {
            let ring = make_ring(Backend::Mixed, q, 1, m + 9)?;
            let mp = m.max(1);
            let space = sl2_space(&ring, m, mp)?;
            let (chi, eta, chi_pi) = if fam.family == "ram-packet" {
                (
                    legendre_char(&unit_group(&ring, mp)?)?,
                    legendre_char(&unit_group(&ring, m.max(1))?)?,
                    CharValue::one(q),
                )
            } else {
                (
                    UnitChar::trivial(&unit_group(&ring, mp)?),
                    UnitChar::trivial(&unit_group(&ring, m.max(1))?),
                    CharValue::from_root(q, RootOfUnity::new(2, 1)),
                )
            };
            if fam.family == "ram-packet" && m == 0 {
                return Ok((Some(0), None));
            }
            let split = sl2_packet_split(&sl2_model(&space, &chi, &eta)?, &chi_pi)?;
            let d = match fam.member()? {
                Member::One => split.dim1,
                Member::Two => split.dim2,
            };
            (Some(d), None)
        }
        "sc2" if fam.l == 1 => {
            let ring = make_ring(Backend::Mixed, q, 1, m + 5)?;
            let (datum, eta) = sc_model(&ring, q, false)?;
            sc_tower_dims(&datum, &eta, m, fam.member()? == Member::Two)?
        }
        "sc4" => {
            let ring = make_ring(Backend::Mixed, q, 1, m + 5)?;
            let (datum, eta) = sc_model(&ring, q, true)?;
            let swapped = matches!(fam.sc4_member()?, Sc4Member::Pi1Prime | Sc4Member::Pi2Prime);
            sc_tower_dims(&datum, &eta, m, swapped)?
        }
        "u11-exceptional" | "u11-ps" if fam.family == "u11-exceptional" || fam.cchi == 1 => {
            let ring = make_ring(Backend::Mixed, q, 1, m + 2)?;
            let ext = make_quad_ext(&ring)?;
            let mp = m.max(1);
            let uspace = u11_space(&ext, m, mp)?;
            let want = if fam.family == "u11-exceptional" { "exceptional" } else { "generic" };
            let cfg = u11_configs(&ext, mp, m)?
                .into_iter()
                .find(|c| c.name == want)
                .ok_or_else(|| Error::Internal("missing inducing character shape".into()))?;
            (Some(uspace.dim(&cfg.chi_bar, &cfg.eta_bar)?), None)
        }
        "u11-packet" => {
            let ring = make_ring(Backend::Mixed, q, 1, m + 9)?;
            let ext = make_quad_ext(&ring)?;
            let mp = m.max(1);
            let chi = UnitChar::trivial(&unit_group(&ring, mp)?);
            let eta = UnitChar::trivial(&unit_group(&ring, m.max(1))?);
            let space = sl2_space(&ring, m, mp)?;
            let model = sl2_model(&space, &chi, &eta)?;
            let gq = quad_unit_group(&ext, mp)?;
            let ge = quad_unit_group(&ext, m.max(1))?;
            let chi_pi = CharValue::from_root(q, RootOfUnity::new(2, 1));
            let (km, kpm) = u11_packet_dims(
                &model,
                &ext,
                &newforms::characters::QuadUnitChar::trivial(&gq),
                &newforms::characters::QuadUnitChar::trivial(&ge),
                &chi_pi,
            )?;
            match fam.member()? {
                Member::One => (Some(km.0), Some(kpm.0)),
                Member::Two => (Some(km.1), Some(kpm.1)),
            }
        }
        _ => (None, None),
    };
    Ok(out)
}

/// First regular cuspidal datum of the requested split kind at this residue
/// field, together with the first admissible level-one character.
fn sc_model(ring: &RingSpec, q: u64, split: bool) -> Result<(InducingDatum, UnitChar)> {
    let n = q * q - 1;
    let data = (1..n)
        .filter(|&t| (t * q) % n != t)
        .map(|t| cuspidal_character(q, 1, t))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .find(|d| d.splits == split)
        .ok_or_else(|| Error::Internal("no cuspidal datum of the requested kind".into()))?;
    let ug = unit_group(ring, 1)?;
    let eta = enumerate_unit_chars(&ug)
        .into_iter()
        .find(|e| admissible(&data, e).unwrap_or(false))
        .ok_or_else(|| Error::Internal("no admissible character".into()))?;
    let datum = newforms::supercuspidal::inducing_data(&data)?
        .into_iter()
        .next()
        .ok_or_else(|| Error::Internal("empty inducing data".into()))?;
    Ok((datum, eta))
}

fn sc_tower_dims(
    datum: &InducingDatum,
    eta: &UnitChar,
    m: usize,
    swap: bool,
) -> Result<(Option<usize>, Option<usize>)> {
    if m == 0 {
        return Ok((Some(0), Some(0)));
    }
    let k = mackey_dims(datum, eta, m, Tower::K)?;
    let kp = mackey_dims(datum, eta, m, Tower::KPrime)?;
    Ok(if swap { (Some(kp), Some(k)) } else { (Some(k), Some(kp)) })
}

fn opt_cell(v: Option<usize>) -> String {
    v.map(|d| d.to_string()).unwrap_or_default()
}

fn cmd_dim_table(args: &DimTableArgs, cfg: &BTreeMap<String, String>, format: &str) -> Result<i32> {
    let q = args
        .fam
        .q
        .or_else(|| cfg.get("q").and_then(|v| v.parse().ok()))
        .unwrap_or(3);
    let m_spec = args
        .m
        .clone()
        .or_else(|| cfg.get("m").cloned())
        .unwrap_or_else(|| "0..3".into());
    let tower_spec = args
        .tower
        .clone()
        .or_else(|| cfg.get("tower").cloned())
        .unwrap_or_else(|| "K".into());
    let (lo, hi) = parse_range(&m_spec)?;
    let tower = parse_tower(&tower_spec)?;
    let d = args.fam.descriptor()?;
    let mut rows = Vec::new();
    let mut all_match = true;
    for m in lo..=hi {
        let formula = dim_formula(&d, m, tower)?;
        let (mk, mkp) = model_dims(&args.fam, q, m)?;
        let relevant = match tower {
            Tower::K => mk,
            Tower::KPrime => mkp,
        };
        let ok = relevant.map(|v| v == formula).unwrap_or(true);
        all_match &= ok;
        rows.push(vec![
            m.to_string(),
            opt_cell(mk),
            opt_cell(mkp),
            formula.to_string(),
            if relevant.is_none() {
                String::new()
            } else if ok {
                "yes".into()
            } else {
                "NO".into()
            },
        ]);
    }
    let table = Table {
        schema: "dim-table/1",
        headers: vec!["m", "K-dim", "K'-dim", "formula-dim", "match"],
        rows,
    };
    print!("{}", table.render(format)?);
    Ok(if all_match { 0 } else { 2 })
}

fn cmd_ring_info(args: &RingArgs, format: &str) -> Result<i32> {
    let backend = parse_backend(&args.backend)?;
    let ring = make_ring(backend, args.p, args.f, args.prec)?;
    let mut rows = vec![
        vec!["backend".to_string(), args.backend.clone()],
        vec!["p".to_string(), args.p.to_string()],
        vec!["f".to_string(), args.f.to_string()],
        vec!["q".to_string(), ring.q.to_string()],
        vec!["precision".to_string(), args.prec.to_string()],
    ];
    for level in 1..=args.prec.min(3) {
        let ug = unit_group(&ring, level)?;
        let orders: Vec<String> = ug.grp.orders.iter().map(|o| o.to_string()).collect();
        rows.push(vec![
            format!("units mod level {level}"),
            format!("cyclic factors [{}]", orders.join(", ")),
        ]);
    }
    let table = Table {
        schema: "ring-info/1",
        headers: vec!["property", "value"],
        rows,
    };
    print!("{}", table.render(format)?);
    Ok(0)
}

fn cmd_chars(args: &CharsArgs, format: &str) -> Result<i32> {
    let backend = parse_backend(&args.ring.backend)?;
    let ring = make_ring(backend, args.ring.p, args.ring.f, args.ring.prec)?;
    let mut rows = Vec::new();
    if args.quad {
        let ext = make_quad_ext(&ring)?;
        let gq = quad_unit_group(&ext, args.level)?;
        for (i, c) in enumerate_quad_unit_chars(&gq).iter().enumerate() {
            rows.push(vec![
                i.to_string(),
                format!("{:?}", c.ch.exps),
                c.conductor()?.to_string(),
                c.ch.order(&gq.grp).to_string(),
            ]);
        }
    } else {
        let ug = unit_group(&ring, args.level)?;
        for (i, c) in enumerate_unit_chars(&ug).iter().enumerate() {
            rows.push(vec![
                i.to_string(),
                format!("{:?}", c.ch.exps),
                c.conductor()?.to_string(),
                c.ch.order(&ug.grp).to_string(),
            ]);
        }
    }
    let table = Table {
        schema: "chars/1",
        headers: vec!["index", "exponents", "conductor", "order"],
        rows,
    };
    print!("{}", table.render(format)?);
    Ok(0)
}

fn cmd_conductor(fam: &FamilyArgs, cfg: &BTreeMap<String, String>, format: &str) -> Result<i32> {
    let q = fam.q.or_else(|| cfg.get("q").and_then(|v| v.parse().ok())).unwrap_or(3);
    let d = fam.descriptor()?;
    let cd = conductor_formula(&d)?;
    let mut rows = vec![
        vec!["family".to_string(), fam.family.clone()],
        vec!["conductor".to_string(), cd.conductor.to_string()],
        vec!["newform-dim".to_string(), cd.newform_dim.to_string()],
    ];
    if fam.family == "ram-ps" && fam.cchi == 1 && matches!(q, 3 | 5) {
        let model_q = if fam.chi_sq_trivial { 3 } else { 5 };
        let m = cd.conductor;
        let ring = make_ring(Backend::Mixed, model_q, 1, m + 1)?;
        let chi = ramified_char(&ring, m.max(1), fam.chi_sq_trivial)?;
        let space = sl2_space(&ring, m, m.max(1))?;
        let ge = unit_group(&ring, m.max(1))?;
        let mut achieved = Vec::new();
        for e in enumerate_unit_chars(&ge) {
            if space.dim(&chi, &e)? > 0 {
                let label = if e.ch.exps == chi.ch.exps && e.ch.exps == chi.inv().ch.exps {
                    "chi = chi^-1"
                } else if e.ch.exps == chi.ch.exps {
                    "chi"
                } else if e.ch.exps == chi.inv().ch.exps {
                    "chi^-1"
                } else {
                    "other"
                };
                achieved.push(label.to_string());
            }
        }
        rows.push(vec!["achieving-eta".to_string(), achieved.join(", ")]);
    }
    let table = Table {
        schema: "conductor/1",
        headers: vec!["property", "value"],
        rows,
    };
    print!("{}", table.render(format)?);
    Ok(0)
}

fn cmd_packet(fam: &FamilyArgs, cfg: &BTreeMap<String, String>, format: &str) -> Result<i32> {
    let q = fam.q.or_else(|| cfg.get("q").and_then(|v| v.parse().ok())).unwrap_or(3);
    let (d1, d2) = match fam.family.as_str() {
        "ram-packet" => (
            ReprDescriptor::RamPacketMember { member: Member::One },
            ReprDescriptor::RamPacketMember { member: Member::Two },
        ),
        "unram-packet" => (
            ReprDescriptor::UnramPacketMember { member: Member::One },
            ReprDescriptor::UnramPacketMember { member: Member::Two },
        ),
        "u11-packet" => (
            ReprDescriptor::U11PacketMember { member: Member::One },
            ReprDescriptor::U11PacketMember { member: Member::Two },
        ),
        other => {
            return Err(Error::Parse(format!("'{other}' is not a packet family")));
        }
    };
    let mut rows = Vec::new();
    for m in 0..=2usize {
        let mut fam1 = FamilyArgs { member: "1".into(), q: Some(q), ..clone_family(fam) };
        fam1.family = fam.family.clone();
        let (mk, _) = model_dims(&fam1, q, m)?;
        let mut fam2 = FamilyArgs { member: "2".into(), q: Some(q), ..clone_family(fam) };
        fam2.family = fam.family.clone();
        let (mk2, _) = model_dims(&fam2, q, m)?;
        rows.push(vec![
            m.to_string(),
            format!(
                "({}, {})",
                dim_formula(&d1, m, Tower::K)?,
                dim_formula(&d2, m, Tower::K)?
            ),
            format!("({}, {})", opt_cell(mk), opt_cell(mk2)),
        ]);
    }
    for (class, member) in genericity_assignment(&d1)? {
        rows.push(vec![format!("generic for psi_{class}"), member.to_string(), String::new()]);
    }
    let table = Table {
        schema: "packet/1",
        headers: vec!["m / property", "member dims (formula)", "member dims (model)"],
        rows,
    };
    print!("{}", table.render(format)?);
    Ok(0)
}

fn clone_family(f: &FamilyArgs) -> FamilyArgs {
    FamilyArgs {
        family: f.family.clone(),
        q: f.q,
        cchi: f.cchi,
        l: f.l,
        member: f.member.clone(),
        rho0: f.rho0,
        conjugate: f.conjugate,
        chi_sq_trivial: f.chi_sq_trivial,
    }
}

fn cmd_whittaker(args: &WhittakerArgs, cfg: &BTreeMap<String, String>, format: &str) -> Result<i32> {
    let q = args.q.or_else(|| cfg.get("q").and_then(|v| v.parse().ok())).unwrap_or(3);
    if !matches!(q, 3 | 5) {
        return Err(Error::ResourceGuard(
            "Whittaker evaluation is only within reach for q = 3 or 5".into(),
        ));
    }
    let sign = match args.chi.as_str() {
        "trivial" => 0i64,
        "minus" => 1,
        other => {
            return Err(Error::Parse(format!("chi must be trivial or minus, got '{other}'")));
        }
    };
    let ring = make_ring(Backend::Mixed, q, 1, 9)?;
    let chi_pi = CharValue::from_root(q, RootOfUnity::new(2, sign));
    let value = match args.family.as_str() {
        "unram-ps" => {
            let space = sl2_space(&ring, 0, 1)?;
            let gc = unit_group(&ring, 1)?;
            let model = sl2_model(&space, &UnitChar::trivial(&gc), &UnitChar::trivial(&gc))?;
            whittaker_sl2(&model, &chi_pi, 0, &psi_classes(&ring)[0])?
        }
        "steinberg" => {
            let space = sl2_space(&ring, 1, 1)?;
            let gc = unit_group(&ring, 1)?;
            let model = sl2_model(&space, &UnitChar::trivial(&gc), &UnitChar::trivial(&gc))?;
            // the Steinberg line inside the two-dimensional level-one space
            let inv_q = CharValue { q, root: RootOfUnity::one(), qpow2: -2 };
            let lam: Vec<_> = (0..2)
                .map(|i| whittaker_sl2(&model, &inv_q, i, &psi_classes(&ring)[0]))
                .collect::<Result<_>>()?;
            let avg: Vec<_> = (0..2).map(|i| model.average(i, q)).collect::<Result<_>>()?;
            avg[1].mul(&lam[0])?.sub(&avg[0].mul(&lam[1])?)?
        }
        other => {
            return Err(Error::Parse(format!(
                "whittaker evaluation covers unram-ps and steinberg, got '{other}'"
            )));
        }
    };
    let rendered = match value.to_rational() {
        Ok(r) => r.to_string(),
        Err(_) => format!("{value:?}"),
    };
    let table = Table {
        schema: "whittaker/1",
        headers: vec!["family", "chi(pi)", "value"],
        rows: vec![vec![args.family.clone(), args.chi.clone(), rendered]],
    };
    print!("{}", table.render(format)?);
    Ok(0)
}

fn cell_in_scope(context: &str, q: Option<u64>, max_m: Option<usize>) -> bool {
    for token in context.split_whitespace() {
        if let Some(v) = token.strip_prefix("q=") {
            if let (Some(want), Ok(got)) = (q, v.parse::<u64>()) {
                if got != want {
                    return false;
                }
            }
        }
        if let Some(v) = token.strip_prefix("m=") {
            if let (Some(cap), Ok(got)) = (max_m, v.parse::<usize>()) {
                if got > cap {
                    return false;
                }
            }
        }
    }
    true
}

fn cmd_verify(args: &VerifyArgs, format: &str) -> Result<i32> {
    suite_checks(&args.suite)?;
    let checks = run_suite(&args.suite)?;
    let mut all_pass = true;
    let mut doc_checks = Vec::new();
    let mut lines = Vec::new();
    for check in &checks {
        let cells: Vec<_> = check
            .cells
            .iter()
            .filter(|c| cell_in_scope(&c.context, args.q, args.max_m))
            .collect();
        let pass = !cells.is_empty() && cells.iter().all(|c| c.pass);
        all_pass &= pass;
        lines.push(format!(
            "{:24} {:5} ({} cells) {}",
            check.id,
            if pass { "pass" } else { "FAIL" },
            cells.len(),
            check.title
        ));
        for c in cells.iter().filter(|c| !c.pass) {
            lines.push(format!("    {}: expected {} got {}", c.context, c.expected, c.got));
        }
        doc_checks.push(serde_json::json!({
            "id": check.id,
            "title": check.title,
            "pass": pass,
            "cells": cells.iter().map(|c| serde_json::json!({
                "context": c.context,
                "expected": c.expected,
                "got": c.got,
                "pass": c.pass,
            })).collect::<Vec<_>>(),
        }));
    }
    match format {
        "json" => {
            let doc = serde_json::json!({
                "schema": "verify/1",
                "suite": args.suite,
                "pass": all_pass,
                "checks": doc_checks,
            });
            println!("{}", serde_json::to_string_pretty(&doc).expect("static schema"));
        }
        "csv" => {
            println!("id,pass,cells");
            for c in &checks {
                println!("{},{},{}", c.id, c.passed(), c.cells.len());
            }
        }
        _ => {
            for l in &lines {
                println!("{l}");
            }
            println!("overall: {}", if all_pass { "pass" } else { "FAIL" });
        }
    }
    Ok(if all_pass { 0 } else { 2 })
}

fn dispatch(cli: &Cli) -> Result<i32> {
    let cfg = load_config(&cli.config)?;
    let format = cli
        .format
        .clone()
        .or_else(|| cfg.get("format").cloned())
        .unwrap_or_else(|| "md".into());
    match &cli.cmd {
        Cmd::RingInfo(a) => cmd_ring_info(a, &format),
        Cmd::Chars(a) => cmd_chars(a, &format),
        Cmd::DimTable(a) => cmd_dim_table(a, &cfg, &format),
        Cmd::Conductor(a) => cmd_conductor(a, &cfg, &format),
        Cmd::Packet(a) => cmd_packet(a, &cfg, &format),
        Cmd::Whittaker(a) => cmd_whittaker(a, &cfg, &format),
        Cmd::Verify(a) => cmd_verify(a, &format),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match dispatch(&cli) {
        Ok(code) => std::process::exit(code),
        Err(Error::ResourceGuard(msg)) => {
            eprintln!("resource guard: {msg}");
            std::process::exit(3);
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    }
}
