//! Enumeration campaigns and theorem-verification suites.
//!
//! A campaign lists isomorphism classes of toroids on a tessellation up to
//! an index bound. Two modes exist:
//!
//! * `Full` walks every sublattice of the vertex lattice, index by index, and
//!   groups them into orbits under the point group.
//! * `FewOrbit { max_orbits: k }` only lists classes with at most `k`
//!   flag-orbits. Such a lattice has a stabilizer of index at most `k`
//!   containing the central inversion, so after conjugation it is invariant
//!   under one of the low-index subgroup representatives. Only lattices
//!   invariant under those representatives are enumerated.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::group::{
    self, hyperoctahedral, is_conjugate, low_index_subgroups, named_group_in, GroupError, ParentFamily,
    Subgroup, LOW_INDEX_REPRESENTATIVES,
};
use crate::lattice::{
    count_sublattices, count_sublattices_up_to, count_sublattices_up_to_capped, invariant_sublattices, named, sublattices_of_index, Lattice,
    LatticeError, NamedLattice, DEFAULT_SUBLATTICE_CAP,
};
use crate::stg::{stg_from_orbit, StgError};
use crate::toroid::{canonical_form, lattice_orbit, Family, LatticeOrbit, Tessellation, ToroidError};

#[derive(Debug, Error)]
pub enum CensusError {
    #[error("bound too large: {0}")]
    BoundTooLarge(String),
    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("i/o failure: {0}")]
    IoFailure(#[from] io::Error),
    #[error("malformed report line: {0}")]
    Malformed(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Toroid(#[from] ToroidError),
    #[error(transparent)]
    Stg(#[from] StgError),
}

/// Largest index accepted by the few-orbit mode.
pub const FEW_ORBIT_INDEX_CAP: u64 = 4096;

/// One isomorphism class of toroids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CensusRecord {
    pub tess: String,
    pub n: usize,
    /// Canonical HNF (smallest in the orbit) in standard coordinates.
    pub hnf: Vec<Vec<i64>>,
    /// Index in the vertex lattice of the tessellation.
    pub index: i64,
    pub orbits: usize,
    #[serde(rename = "class2I")]
    pub class2i: Option<Vec<usize>>,
    pub stg: String,
    pub family: Option<String>,
}

impl CensusRecord {
    pub fn lattice(&self) -> Lattice {
        Lattice::from_basis(&self.hnf).expect("records hold full-rank bases")
    }

    /// Class 2_I with empty I: the stabilizer would be the rotation group.
    pub fn is_chiral_candidate(&self) -> bool {
        self.orbits == 2 && self.class2i.as_ref().is_some_and(Vec::is_empty)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum CampaignMode {
    Full,
    FewOrbit { max_orbits: usize },
}

#[derive(Debug, Clone)]
pub struct CampaignConfig {
    /// Largest number of sublattices the full mode may walk.
    pub cap: u128,
    /// Forces a mode; `None` picks full mode when it fits under `cap`.
    pub mode: Option<CampaignMode>,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            cap: DEFAULT_SUBLATTICE_CAP,
            mode: None,
        }
    }
}

impl CampaignConfig {
    /// Reads the cap from `TOROIDLAB_MAX_SUBLATTICES` when set.
    pub fn from_env() -> Self {
        let cap = std::env::var("TOROIDLAB_MAX_SUBLATTICES")
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .unwrap_or(DEFAULT_SUBLATTICE_CAP);
        Self { cap, mode: None }
    }
}

#[derive(Debug, Clone)]
pub struct Campaign {
    pub tess: String,
    pub n: usize,
    pub max_index: u64,
    pub mode: CampaignMode,
    pub records: Vec<CensusRecord>,
    /// Whether orbit sizes per index summed to the sublattice count (full
    /// mode only).
    pub partition_ok: Option<bool>,
}

impl Campaign {
    /// Orbit counts for which the record list is complete.
    pub fn complete_for(&self, orbits: usize) -> bool {
        match self.mode {
            CampaignMode::Full => true,
            CampaignMode::FewOrbit { max_orbits } => orbits <= max_orbits,
        }
    }

    pub fn with_orbits(&self, k: usize) -> impl Iterator<Item = &CensusRecord> + '_ {
        self.records.iter().filter(move |r| r.orbits == k)
    }

    pub fn chiral_violations(&self) -> Vec<&CensusRecord> {
        self.records.iter().filter(|r| r.is_chiral_candidate()).collect()
    }

    /// Records that are few-orbit but match no known family.
    pub fn unmatched(&self) -> Vec<&CensusRecord> {
        let few = few_orbit_limit(self.n);
        self.records
            .iter()
            .filter(|r| r.family.is_none() && r.orbits <= few)
            .collect()
    }

    pub fn summary(&self) -> Summary {
        let mut orbits = BTreeMap::new();
        for r in &self.records {
            *orbits.entry(r.orbits).or_insert(0usize) += 1;
        }
        Summary {
            tess: self.tess.clone(),
            n: self.n,
            max_index: self.max_index,
            mode: self.mode,
            records: self.records.len(),
            orbits,
        }
    }
}

fn few_orbit_limit(n: usize) -> usize {
    n.max(3)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub tess: String,
    pub n: usize,
    pub max_index: u64,
    pub mode: CampaignMode,
    pub records: usize,
    pub orbits: BTreeMap<usize, usize>,
}

/// Default `max_orbits` for the few-orbit mode on a tessellation.
pub fn default_max_orbits(t: &Tessellation) -> usize {
    if t.point_group().order() <= 4000 {
        t.n().min(4)
    } else {
        2
    }
}

/// Projected number of sublattices a full campaign would walk.
pub fn projected_count(t: &Tessellation, max_index: u64) -> u128 {
    count_sublattices_up_to(t.n(), max_index)
}

pub fn run_campaign(t: &Arc<Tessellation>, max_index: u64, cfg: &CampaignConfig) -> Result<Campaign, CensusError> {
    if max_index == 0 {
        return Err(CensusError::InvalidParams("max_index must be positive".into()));
    }
    let projected = count_sublattices_up_to_capped(t.n(), max_index, cfg.cap);
    let mode = match cfg.mode {
        Some(m) => m,
        None if projected <= cfg.cap => CampaignMode::Full,
        None => CampaignMode::FewOrbit {
            max_orbits: default_max_orbits(t),
        },
    };
    match mode {
        CampaignMode::Full if projected > cfg.cap => {
            return Err(CensusError::BoundTooLarge(format!(
                "full census would walk more than {} sublattices",
                cfg.cap
            )));
        }
        CampaignMode::FewOrbit { .. } if max_index > FEW_ORBIT_INDEX_CAP => {
            return Err(CensusError::BoundTooLarge(format!(
                "few-orbit census supports max_index <= {FEW_ORBIT_INDEX_CAP}"
            )));
        }
        _ => {}
    }
    let tags = family_tags(t, max_index);
    let (records, partition_ok) = match mode {
        CampaignMode::Full => {
            let (r, ok) = full_census(t, max_index, &tags);
            (r, Some(ok))
        }
        CampaignMode::FewOrbit { max_orbits } => {
            (few_orbit_census(t, max_index, max_orbits, &tags)?, None)
        }
    };
    Ok(Campaign {
        tess: t.name().to_string(),
        n: t.n(),
        max_index,
        mode,
        records,
        partition_ok,
    })
}

fn record_from_orbit(t: &Tessellation, orbit: &LatticeOrbit, tags: &HashMap<Lattice, String>) -> CensusRecord {
    let root = orbit.min_vertex();
    let canon = &orbit.lattices[root];
    let g = stg_from_orbit(t, orbit, root);
    let orbits = orbit.len();
    debug_assert_eq!(t.point_group().order() % orbits, 0, "Lagrange");
    CensusRecord {
        tess: t.name().to_string(),
        n: t.n(),
        hnf: canon.row_vecs(),
        index: t.relative_index(canon),
        orbits,
        class2i: (orbits == 2).then(|| g.semi_edges(0).into_iter().collect()),
        stg: g.canonical_key(),
        family: tags.get(canon).cloned(),
    }
}

fn sort_records(records: &mut [CensusRecord]) {
    records.sort_by(|a, b| a.index.cmp(&b.index).then_with(|| a.hnf.cmp(&b.hnf)));
}

fn full_census(t: &Arc<Tessellation>, max_index: u64, tags: &HashMap<Lattice, String>) -> (Vec<CensusRecord>, bool) {
    let ambient = t.vertex_lattice().clone();
    let per_index: Vec<(Vec<CensusRecord>, bool)> = (1..=max_index)
        .into_par_iter()
        .map(|m| {
            let mut seen: HashSet<Lattice> = HashSet::new();
            let mut records = Vec::new();
            let mut walked = 0u128;
            for l in sublattices_of_index(&ambient, m) {
                walked += 1;
                if seen.contains(&l) {
                    continue;
                }
                let orbit = lattice_orbit(t, &l, usize::MAX).expect("unbounded");
                records.push(record_from_orbit(t, &orbit, tags));
                seen.extend(orbit.lattices);
            }
            let expected = count_sublattices(ambient.dim(), m);
            (records, walked == expected && seen.len() as u128 == expected)
        })
        .collect();
    let ok = per_index.iter().all(|(_, ok)| *ok);
    let mut records: Vec<CensusRecord> = per_index.into_iter().flat_map(|(r, _)| r).collect();
    sort_records(&mut records);
    (records, ok)
}

/// Representatives of the conjugacy classes of subgroups of index at most
/// `k` that contain the central inversion, including the whole group.
pub fn stabilizer_candidates(t: &Tessellation, k: usize) -> Result<Vec<Subgroup>, CensusError> {
    let g = t.point_group();
    let mut out = vec![g.whole()];
    for j in 2..=k {
        out.extend(low_index_subgroups(g, j, true)?);
    }
    Ok(out)
}

fn few_orbit_census(
    t: &Arc<Tessellation>,
    max_index: u64,
    max_orbits: usize,
    tags: &HashMap<Lattice, String>,
) -> Result<Vec<CensusRecord>, CensusError> {
    let candidates = stabilizer_candidates(t, max_orbits)?;
    let ambient = t.vertex_lattice().clone();
    let found: Vec<Vec<Lattice>> = candidates
        .par_iter()
        .map(|h| invariant_sublattices(&ambient, max_index, h))
        .collect::<Result<_, _>>()?;
    let lattices: BTreeSet<Lattice> = found.into_iter().flatten().collect();
    let records: Vec<Option<CensusRecord>> = lattices
        .par_iter()
        .map(|l| lattice_orbit(t, l, max_orbits).map(|o| record_from_orbit(t, &o, tags)))
        .collect();
    let mut uniq: BTreeMap<Vec<Vec<i64>>, CensusRecord> = BTreeMap::new();
    for r in records.into_iter().flatten() {
        uniq.entry(r.hnf.clone()).or_insert(r);
    }
    let mut records: Vec<CensusRecord> = uniq.into_values().collect();
    sort_records(&mut records);
    Ok(records)
}

// ---------------------------------------------------------------------------
// Families.

/// Index of `Lambda_1` in `Z^n`: `(n - 2) 2^(n-1)`.
pub fn lambda1_index(n: usize) -> i64 {
    (n as i64 - 2) * (1i64 << (n - 1))
}

/// Whether `(s, d)` satisfies the constraints stated for family `k` of the
/// n-orbit classification.
pub fn family_constraint_ok(k: usize, s: i64, d: i64) -> bool {
    match k {
        1 => s != d,
        2 | 3 => true,
        4 => s % 2 == 0 && d % 2 == 0 && d != s,
        5 => d % 2 == 0 && d != 2 * s,
        _ => false,
    }
}

/// Member `(s, d)` of family `k` (1..=5) of the n-orbit classification, or `None`
/// when the parameters do not give an integral lattice.
///
/// Every family is a lattice in the hyperplane `x_n = 0` plus layers
/// generated by one more vector; the base lattices have dimension `n - 1`.
pub fn n_orbit_family(k: usize, n: usize, s: i64, d: i64) -> Option<Lattice> {
    if n < 3 || s < 1 || d < 1 {
        return None;
    }
    let m = n - 1;
    let embed = |rows: Vec<Vec<i64>>| -> Vec<Vec<i64>> {
        rows.into_iter()
            .map(|mut r| {
                r.push(0);
                r
            })
            .collect()
    };
    let scaled = |name: NamedLattice| -> Vec<Vec<i64>> {
        name.basis(m)
            .expect("base dimension is supported")
            .into_iter()
            .map(|r| r.into_iter().map(|x| x * s).collect())
            .collect()
    };
    let top = |v: Vec<i64>, rows: Vec<Vec<i64>>| -> Vec<Vec<i64>> {
        let mut rows = embed(rows);
        rows.push(v);
        rows
    };
    let mut last = vec![0i64; n];
    let rows = match k {
        1 => {
            last[m] = d;
            top(last, scaled(NamedLattice::Cln))
        }
        2 => {
            last[m] = d;
            top(last, scaled(NamedLattice::Fcln))
        }
        3 => {
            last[m] = d;
            top(last, scaled(NamedLattice::Bcln))
        }
        4 => {
            if s % 2 != 0 || d % 2 != 0 {
                return None;
            }
            let mut v = vec![s / 2; n];
            v[m] = d / 2;
            top(v, scaled(NamedLattice::Cln))
        }
        5 => {
            if d % 2 != 0 {
                return None;
            }
            last[0] = s;
            last[m] = d / 2;
            top(last, scaled(NamedLattice::Fcln))
        }
        _ => return None,
    };
    Lattice::from_basis(&rows).ok()
}

/// Map from canonical forms to family tags for every known family member
/// inside the vertex lattice with index at most `max_index`.
pub fn family_tags(t: &Tessellation, max_index: u64) -> HashMap<Lattice, String> {
    let n = t.n();
    let vi = t.vertex_lattice().index();
    let max_abs = max_index as i64 * vi;
    let mut tags = HashMap::new();
    let add = |l: Lattice, tag: String, tags: &mut HashMap<Lattice, String>| {
        if l.index() <= max_abs && l.is_sublattice_of(t.vertex_lattice()) {
            tags.entry(canonical_form(t, &l)).or_insert(tag);
        }
    };
    let mut names = vec![NamedLattice::Cln, NamedLattice::Fcln, NamedLattice::Bcln, NamedLattice::Lambda1];
    if n == 4 {
        names.push(NamedLattice::L11xL11);
    }
    for name in names {
        let Ok(base) = named(name, n, 1) else { continue };
        let mut s = 1i64;
        while base.index().saturating_mul(s.saturating_pow(n as u32)) <= max_abs {
            add(base.scaled(s), format!("{}@{s}", name.as_str()), &mut tags);
            s += 1;
        }
    }
    if t.family() == Family::Cubic {
        for k in 1..=5 {
            for s in 1..=max_abs {
                if s.saturating_pow(n as u32 - 1) > 2 * max_abs {
                    break;
                }
                for d in 1..=2 * max_abs {
                    if !family_constraint_ok(k, s, d) {
                        continue;
                    }
                    let Some(l) = n_orbit_family(k, n, s, d) else { continue };
                    if l.index() > max_abs {
                        if d > 2 * max_abs {
                            break;
                        }
                        continue;
                    }
                    add(l, format!("family{k}(s={s},d={d})"), &mut tags);
                }
            }
        }
    }
    tags
}

/// Family tag of a lattice, if it belongs to one of the known families.
pub fn family_of(t: &Tessellation, l: &Lattice) -> Option<String> {
    let rel = u64::try_from(t.relative_index(l)).ok()?;
    family_tags(t, rel).remove(&canonical_form(t, l))
}

// ---------------------------------------------------------------------------
// Verification suites.

pub const SUITES: [&str; 13] = [
    "cubic-2orbit",
    "cubic-no-k",
    "cubic-3orbit-4d",
    "cubic-n-orbit",
    "index2-subgroups",
    "index3-B4",
    "index34-B5",
    "pgl25-lattices",
    "t3343-2orbit",
    "t3343-no4",
    "t3343-3orbit",
    "table3-reps",
    "stg-properties",
];

#[derive(Debug, Clone, Default)]
pub struct SuiteParams {
    pub n: Option<usize>,
    pub max_index: Option<u64>,
    pub config: CampaignConfig,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub suite: String,
    pub status: Status,
    pub counterexamples: Vec<CensusRecord>,
    pub parameters: serde_json::Value,
    pub runtime_ms: u128,
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

struct Check {
    ok: bool,
    counterexamples: Vec<CensusRecord>,
    notes: Vec<String>,
}

impl Check {
    fn new() -> Self {
        Self {
            ok: true,
            counterexamples: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn require(&mut self, cond: bool, note: impl Into<String>) {
        let note = note.into();
        if !cond {
            self.ok = false;
            self.notes.push(format!("FAILED: {note}"));
        } else {
            self.notes.push(note);
        }
    }

    fn fail_with(&mut self, rec: CensusRecord, note: impl Into<String>) {
        self.ok = false;
        self.notes.push(format!("FAILED: {}", note.into()));
        self.counterexamples.push(rec);
    }
}

/// A record describing an arbitrary lattice on a tessellation.
pub fn describe(t: &Tessellation, l: &Lattice) -> CensusRecord {
    let orbit = lattice_orbit(t, l, usize::MAX).expect("unbounded");
    record_from_orbit(t, &orbit, &HashMap::new())
}

/// Compares the `k`-orbit records of a campaign with an expected set of
/// lattices (given up to isomorphism).
fn compare_class_set(t: &Tessellation, campaign: &Campaign, k: usize, expected: &[Lattice], chk: &mut Check) {
    let want: BTreeSet<Vec<Vec<i64>>> = expected.iter().map(|l| canonical_form(t, l).row_vecs()).collect();
    let got: BTreeSet<Vec<Vec<i64>>> = campaign.with_orbits(k).map(|r| r.hnf.clone()).collect();
    for r in campaign.with_orbits(k) {
        if !want.contains(&r.hnf) {
            chk.fail_with(r.clone(), format!("unexpected {k}-orbit class at index {}", r.index));
        }
    }
    for l in expected {
        let c = canonical_form(t, l);
        if !got.contains(&c.row_vecs()) {
            let rec = describe(t, &c);
            let orbits = rec.orbits;
            chk.fail_with(rec, format!("expected {k}-orbit class {c} has {orbits} orbits"));
        }
    }
    chk.notes.push(format!("{k}-orbit classes found: {}", got.len()));
}

fn multiples_within(t: &Tessellation, base: &Lattice, max_index: u64) -> Vec<Lattice> {
    let mut out = Vec::new();
    let mut s = 1i64;
    loop {
        let l = base.scaled(s);
        if t.relative_index(&l) > max_index as i64 {
            break;
        }
        if l.is_sublattice_of(t.vertex_lattice()) {
            out.push(l);
        }
        s += 1;
    }
    out
}

fn check_campaign_sanity(c: &Campaign, t: &Tessellation, chk: &mut Check) {
    for r in c.chiral_violations() {
        chk.fail_with(r.clone(), "chirality sentinel: 2-orbit class with K' inside the rotation group");
    }
    if let Some(ok) = c.partition_ok {
        chk.require(ok, "orbit sizes partition every index level");
    }
    let order = t.point_group().order();
    chk.require(
        c.records.iter().all(|r| order % r.orbits == 0),
        "orbit counts divide |Go|",
    );
}

pub fn verify_theorem(suite: &str, params: &SuiteParams) -> Result<VerificationReport, CensusError> {
    let start = Instant::now();
    let mut chk = Check::new();
    let parameters;
    match suite {
        "cubic-2orbit" => {
            let n = params.n.unwrap_or(4);
            let max = params.max_index.unwrap_or(default_max_index(n));
            parameters = serde_json::json!({"n": n, "max_index": max});
            let t = Tessellation::cubic(n)?;
            let c = campaign_at_least(&t, max, 2, params)?;
            check_campaign_sanity(&c, &t, &mut chk);
            let expected = if n % 2 == 0 {
                multiples_within(&t, &named(NamedLattice::Lambda1, n, 1)?, max)
            } else {
                Vec::new()
            };
            compare_class_set(&t, &c, 2, &expected, &mut chk);
            let class: Vec<usize> = (1..n).collect();
            for r in c.with_orbits(2) {
                if r.class2i.as_ref() != Some(&class) {
                    chk.fail_with(r.clone(), format!("class {:?} differs from {class:?}", r.class2i));
                }
            }
        }
        "cubic-no-k" => {
            let n = params.n.unwrap_or(5);
            let max = params.max_index.unwrap_or(default_max_index(n));
            parameters = serde_json::json!({"n": n, "max_index": max});
            let t = Tessellation::cubic(n)?;
            let top = (n - 1).min(default_max_orbits(&t));
            let c = campaign_at_least(&t, max, top, params)?;
            check_campaign_sanity(&c, &t, &mut chk);
            for k in 3..=top {
                for r in c.with_orbits(k) {
                    chk.fail_with(r.clone(), format!("{k}-orbit class with 2 < k < n"));
                }
            }
            chk.notes.push(format!("checked orbit counts 3..={top}"));
        }
        "cubic-3orbit-4d" => {
            let max = params.max_index.unwrap_or(256);
            parameters = serde_json::json!({"n": 4, "max_index": max});
            let t = Tessellation::cubic(4)?;
            let c = campaign_at_least(&t, max, 3, params)?;
            check_campaign_sanity(&c, &t, &mut chk);
            let expected = multiples_within(&t, &named(NamedLattice::L11xL11, 4, 1)?, max);
            compare_class_set(&t, &c, 3, &expected, &mut chk);
        }
        "cubic-n-orbit" => {
            let n = params.n.unwrap_or(4);
            let grid = params.max_index.unwrap_or(2) as i64;
            parameters = serde_json::json!({"n": n, "grid": grid});
            let t = Tessellation::cubic(n)?;
            n_orbit_suite(&t, grid, &mut chk);
        }
        "index2-subgroups" => {
            let n = params.n.unwrap_or(4);
            parameters = serde_json::json!({"n": n});
            index2_suite(n, &mut chk)?;
        }
        "index3-B4" => {
            parameters = serde_json::json!({"n": 4});
            let g = Arc::new(hyperoctahedral(4));
            let found = low_index_subgroups(&g, 3, false)?;
            chk.require(found.len() == 1, format!("{} classes of index 3 in B4", found.len()));
            let d4 = named_group_in(&g, ParentFamily::Cubic, "C2n*D4")?;
            chk.require(
                found.iter().all(|h| is_conjugate(&g.whole(), h, &d4).is_some()),
                "the class is that of C2^4 x| D4",
            );
        }
        "index34-B5" => {
            parameters = serde_json::json!({"n": 5});
            let g = Arc::new(hyperoctahedral(5));
            let three = low_index_subgroups(&g, 3, false)?;
            let four = low_index_subgroups(&g, 4, false)?;
            chk.require(three.is_empty(), format!("{} classes of index 3 in B5", three.len()));
            chk.require(four.len() == 1, format!("{} classes of index 4 in B5", four.len()));
            let want = named_group_in(&g, ParentFamily::Cubic, "C2n_plus*A_n")?;
            chk.require(four.iter().all(|h| *h == want), "index-4 class is (C2^5)+ x| A5");
        }
        "pgl25-lattices" => {
            let max = params.max_index.unwrap_or(8);
            parameters = serde_json::json!({"n": 6, "max_index": max});
            pgl_suite(max, &mut chk)?;
        }
        "t3343-2orbit" | "t3343-no4" | "t3343-3orbit" => {
            let max = params.max_index.unwrap_or(32);
            parameters = serde_json::json!({"n": 4, "max_index": max});
            let t = Tessellation::t3343(false);
            let c = campaign_at_least(&t, max, 4, params)?;
            check_campaign_sanity(&c, &t, &mut chk);
            match suite {
                "t3343-2orbit" => {
                    let expected = multiples_within(&t, &named(NamedLattice::Lambda1, 4, 1)?, max);
                    compare_class_set(&t, &c, 2, &expected, &mut chk);
                    for r in c.with_orbits(2) {
                        if r.class2i.as_deref() != Some(&[3, 4][..]) {
                            chk.fail_with(r.clone(), format!("class {:?} differs from [3, 4]", r.class2i));
                        }
                    }
                }
                "t3343-no4" => {
                    for r in c.with_orbits(4) {
                        chk.fail_with(r.clone(), "4-orbit class");
                    }
                }
                _ => {
                    let expected = even_multiples(&t, max)?;
                    compare_class_set(&t, &c, 3, &expected, &mut chk);
                }
            }
        }
        "table3-reps" => {
            parameters = serde_json::json!({"n": 4});
            low_index_reps_suite(&mut chk)?;
        }
        "stg-properties" => {
            parameters = serde_json::json!({"n": [3, 4, 5]});
            stg_suite(&mut chk)?;
        }
        other => return Err(CensusError::UnknownSuite(other.to_string())),
    }
    Ok(VerificationReport {
        suite: suite.to_string(),
        status: if chk.ok { Status::Pass } else { Status::Fail },
        counterexamples: chk.counterexamples,
        parameters,
        runtime_ms: start.elapsed().as_millis(),
        notes: chk.notes,
    })
}

fn even_multiples(t: &Tessellation, max: u64) -> Result<Vec<Lattice>, CensusError> {
    let mut out = Vec::new();
    for base in [Lattice::cubic(4), named(NamedLattice::L11xL11, 4, 1)?] {
        let mut s = 2i64;
        loop {
            let l = base.scaled(s);
            if t.relative_index(&l) > max as i64 {
                break;
            }
            out.push(l);
            s += 2;
        }
    }
    Ok(out)
}

/// Default bounds per dimension.
pub fn default_max_index(n: usize) -> u64 {
    match n {
        0..=3 => 64,
        4 => 256,
        5 => 32,
        _ => 8,
    }
}

/// Runs a campaign complete at least for orbit counts up to `k`.
fn campaign_at_least(t: &Arc<Tessellation>, max: u64, k: usize, params: &SuiteParams) -> Result<Campaign, CensusError> {
    let mut cfg = params.config.clone();
    if cfg.mode.is_none() && count_sublattices_up_to_capped(t.n(), max, cfg.cap) > cfg.cap {
        cfg.mode = Some(CampaignMode::FewOrbit { max_orbits: k });
    }
    run_campaign(t, max, &cfg)
}

fn index2_suite(n: usize, chk: &mut Check) -> Result<(), CensusError> {
    let g = Arc::new(hyperoctahedral(n));
    let found = low_index_subgroups(&g, 2, false)?;
    chk.require(found.len() == 3, format!("{} index-2 classes in B{n}", found.len()));
    for spec in ["B_n_plus", "C2n_plus*S_n", "C2n*A_n"] {
        let want = named_group_in(&g, ParentFamily::Cubic, spec)?;
        chk.require(want.index() == 2, format!("{spec} has index 2"));
        chk.require(found.contains(&want), format!("{spec} is among the index-2 subgroups"));
    }
    Ok(())
}

fn pgl_suite(max: u64, chk: &mut Check) -> Result<(), CensusError> {
    let g = Arc::new(hyperoctahedral(6));
    let h = named_group_in(&g, ParentFamily::Cubic, "C2n*PGL25")?;
    chk.require(h.order() == 64 * 120, format!("|C2^6 x| PGL2(5)| = {}", h.order()));
    let found = invariant_sublattices(&Lattice::cubic(6), max, &h)?;
    let mut expected = BTreeSet::new();
    for name in [NamedLattice::Cln, NamedLattice::Fcln, NamedLattice::Bcln] {
        let base = named(name, 6, 1)?;
        let mut s = 1i64;
        while base.scaled(s).index() <= max as i64 {
            expected.insert(base.scaled(s));
            s += 1;
        }
    }
    let got: BTreeSet<Lattice> = found.into_iter().collect();
    let t = Tessellation::cubic(6)?;
    for l in got.difference(&expected) {
        chk.fail_with(describe(&t, l), format!("unexpected invariant lattice {l}"));
    }
    for l in expected.difference(&got) {
        chk.fail_with(describe(&t, l), format!("missing invariant lattice {l}"));
    }
    chk.notes.push(format!("{} invariant lattices of index <= {max}", got.len()));
    Ok(())
}

fn low_index_reps_suite(chk: &mut Check) -> Result<(), CensusError> {
    let g = Arc::new(group::group_3343());
    let whole = g.whole();
    let mut reps: Vec<(usize, Subgroup)> = Vec::new();
    for (idx, spec) in LOW_INDEX_REPRESENTATIVES {
        let body = spec.strip_prefix("G3343:").unwrap_or(spec);
        let h = named_group_in(&g, ParentFamily::T3343, body)?;
        chk.require(h.index() == idx, format!("{spec} has index {} (stated {idx})", h.index()));
        chk.require(h.contains_chi(), format!("{spec} contains chi"));
        reps.push((idx, h));
    }
    for i in 0..reps.len() {
        for j in i + 1..reps.len() {
            if reps[i].0 == reps[j].0 {
                chk.require(
                    is_conjugate(&whole, &reps[i].1, &reps[j].1).is_none(),
                    format!("{} and {} are not conjugate", LOW_INDEX_REPRESENTATIVES[i].1, LOW_INDEX_REPRESENTATIVES[j].1),
                );
            }
        }
    }
    for k in 2..=4 {
        let found = low_index_subgroups(&g, k, true)?;
        let stated: Vec<&Subgroup> = reps.iter().filter(|(i, _)| *i == k).map(|(_, h)| h).collect();
        chk.require(
            found.len() == stated.len(),
            format!("{} classes of index {k} with chi found, {} listed", found.len(), stated.len()),
        );
        chk.require(
            stated.iter().all(|h| found.iter().any(|f| is_conjugate(&whole, h, f).is_some())),
            format!("every listed index-{k} representative is found by the search"),
        );
    }
    Ok(())
}

fn n_orbit_suite(t: &Arc<Tessellation>, grid: i64, chk: &mut Check) {
    let n = t.n();
    for k in 1..=5 {
        for s in 1..=grid {
            for d in 1..=grid {
                let Some(l) = n_orbit_family(k, n, s, d) else { continue };
                let rec = describe(t, &l);
                let allowed = family_constraint_ok(k, s, d);
                if allowed {
                    if rec.orbits != n {
                        let o = rec.orbits;
                        chk.fail_with(rec, format!("family{k}(s={s},d={d}) has {o} orbits"));
                    }
                } else if (k == 1 && s == d) || (k == 5 && d == 2 * s) {
                    if rec.orbits != 1 {
                        let o = rec.orbits;
                        chk.fail_with(rec, format!("excluded family{k}(s={s},d={d}) has {o} orbits, expected 1"));
                    }
                } else if rec.orbits < n {
                    chk.notes.push(format!("family{k}(s={s},d={d}) outside constraints: {} orbits", rec.orbits));
                }
            }
        }
    }
    // Degenerate members of the families without stated exclusions.
    let mut degenerate = 0;
    for k in 2..=4 {
        for s in 1..=4 {
            for d in 1..=8 {
                if !family_constraint_ok(k, s, d) {
                    continue;
                }
                if let Some(l) = n_orbit_family(k, n, s, d) {
                    let o = describe(t, &l).orbits;
                    if o != n {
                        degenerate += 1;
                        chk.notes.push(format!("observed: family{k}(s={s},d={d}) has {o} orbits"));
                    }
                }
            }
        }
    }
    chk.notes.push(format!(
        "families 2-4 with s <= 4, d <= 8: {degenerate} member(s) with fewer than {n} orbits"
    ));
}

fn stg_suite(chk: &mut Check) -> Result<(), CensusError> {
    use crate::stg::build_stg;
    use crate::toroid::Toroid;
    for n in 3..=5 {
        let t = Tessellation::cubic(n)?;
        let g = build_stg(&Toroid::new(&t, Lattice::cubic(n))?);
        chk.require(
            g.vertex_count() == 1 && g.semi_edges(0).len() == n + 1,
            format!("regular cubic STG for n={n} has one vertex and {} semi-edges", n + 1),
        );
        let mut keys = BTreeSet::new();
        for k in 1..=5 {
            for s in 1..=2 {
                for d in 1..=4 {
                    if !family_constraint_ok(k, s, d) {
                        continue;
                    }
                    let Some(l) = n_orbit_family(k, n, s, d) else { continue };
                    let toroid = Toroid::new(&t, l)?;
                    if toroid.flag_orbit_count() != n {
                        continue;
                    }
                    let g = build_stg(&toroid);
                    chk.require(g.i_face_transitive(0)?, format!("n={n} family{k}(s={s},d={d}) is vertex-transitive"));
                    keys.insert(g.canonical_key());
                    let ends = (0..g.vertex_count()).filter(|&v| g.proper_degree(v) == 1).count();
                    chk.require(ends == 2, format!("n={n} family{k}(s={s},d={d}) STG is a path ({ends} ends)"));
                }
            }
        }
        chk.require(keys.len() == 1, format!("n={n}: {} distinct n-orbit STG keys", keys.len()));
        if n == 3 {
            if let Some(key) = keys.iter().next() {
                chk.require(key.starts_with("n3v3:"), format!("n=3 key {key} has three vertices"));
            }
        }
    }
    let c4 = Tessellation::cubic(4)?;
    let g = build_stg(&Toroid::new(&c4, named(NamedLattice::L11xL11, 4, 1)?)?);
    chk.require(g.vertex_count() == 3, "cubic 3-orbit STG has 3 vertices");
    for i in [0, 1, 3, 4] {
        chk.require(g.i_face_transitive(i)?, format!("cubic 3-orbit toroid is {i}-face-transitive"));
    }
    chk.require(!g.i_face_transitive(2)?, "cubic 3-orbit toroid is not 2-face-transitive");

    let t = Tessellation::t3343(false);
    let reg = build_stg(&Toroid::new(&t, t.vertex_lattice().clone())?);
    chk.require(reg.vertex_count() == 1 && reg.semi_edges(0).len() == 5, "regular {3,3,4,3} STG");
    let b4 = Toroid::new(&t, Lattice::cubic(4).scaled(2))?;
    let want = group::named_group_in(t.point_group(), ParentFamily::T3343, "C2n_plus*S_n*<R2>")?;
    chk.require(*b4.stabilizer() == want, "stabilizer of 2Z^4 is B4 inside [3,4,3]");
    let g = build_stg(&b4);
    chk.require(g.vertex_count() == 3, "{3,3,4,3} 3-orbit STG has 3 vertices");
    chk.require(g.i_face_transitive(0)?, "{3,3,4,3} 3-orbit toroid is vertex-transitive");
    chk.require(!g.i_face_transitive(1)?, "{3,3,4,3} toroid with K' = B4 is not 1-face-transitive");
    chk.require(!g.i_face_transitive(2)?, "{3,3,4,3} toroid with K' = B4 is not 2-face-transitive");
    let d4 = Toroid::new(&t, named(NamedLattice::L11xL11, 4, 2)?)?;
    let g = build_stg(&d4);
    chk.require(g.vertex_count() == 3, "2 L11xL11 is a 3-orbit {3,3,4,3} toroid");
    chk.require(g.i_face_transitive(3)?, "{3,3,4,3} toroid with the D4-based stabilizer is 3-face-transitive");
    Ok(())
}

// ---------------------------------------------------------------------------
// Persistence.

/// Writes records as JSON Lines followed by one summary line.
pub fn write_report(campaign: &Campaign, path: &Path) -> Result<(), CensusError> {
    let mut f = io::BufWriter::new(fs::File::create(path)?);
    write_records(&mut f, campaign)?;
    f.flush()?;
    Ok(())
}

pub fn write_records(w: &mut impl Write, campaign: &Campaign) -> Result<(), CensusError> {
    for r in &campaign.records {
        serde_json::to_writer(&mut *w, r).map_err(io::Error::from)?;
        writeln!(w)?;
    }
    let footer = serde_json::json!({ "summary": campaign.summary() });
    serde_json::to_writer(&mut *w, &footer).map_err(io::Error::from)?;
    writeln!(w)?;
    Ok(())
}

/// Reads a report written by [`write_report`].
pub fn read_report(path: &Path) -> Result<(Vec<CensusRecord>, Summary), CensusError> {
    let f = io::BufReader::new(fs::File::open(path)?);
    let mut records = Vec::new();
    let mut summary = None;
    for line in f.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let v: serde_json::Value = serde_json::from_str(&line).map_err(|e| CensusError::Malformed(e.to_string()))?;
        if let Some(s) = v.get("summary") {
            summary = Some(serde_json::from_value(s.clone()).map_err(|e| CensusError::Malformed(e.to_string()))?);
        } else {
            records.push(serde_json::from_value(v).map_err(|e| CensusError::Malformed(e.to_string()))?);
        }
    }
    let summary = summary.ok_or_else(|| CensusError::Malformed("missing summary line".into()))?;
    Ok((records, summary))
}

pub fn write_verification(report: &VerificationReport, path: &Path) -> Result<(), CensusError> {
    let s = serde_json::to_string_pretty(report).map_err(io::Error::from)?;
    fs::write(path, s + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cubic_campaign() {
        let t = Tessellation::cubic(4).unwrap();
        let c = run_campaign(&t, 16, &CampaignConfig::default()).unwrap();
        assert_eq!(c.mode, CampaignMode::Full);
        assert_eq!(c.partition_ok, Some(true));
        let find = |l: Lattice| {
            let h = canonical_form(&t, &l).row_vecs();
            c.records.iter().find(|r| r.hnf == h).cloned().unwrap()
        };
        assert_eq!(find(Lattice::cubic(4)).orbits, 1);
        assert_eq!(find(named(NamedLattice::Fcln, 4, 1).unwrap()).orbits, 1);
        assert_eq!(find(named(NamedLattice::L11xL11, 4, 1).unwrap()).orbits, 3);
        assert_eq!(find(named(NamedLattice::Bcln, 4, 1).unwrap()).orbits, 1);
        let l1 = find(named(NamedLattice::Lambda1, 4, 1).unwrap());
        assert_eq!(l1.orbits, 2);
        assert_eq!(l1.class2i, Some(vec![1, 2, 3]));
        assert_eq!(l1.family.as_deref(), Some("lambda1@1"));
        let f1 = find(n_orbit_family(1, 4, 1, 2).unwrap());
        assert_eq!(f1.index, 2);
        assert_eq!(f1.orbits, 4);
        assert!(c.chiral_violations().is_empty());
    }

    #[test]
    fn trivial_campaigns() {
        let t = Tessellation::t3343(false);
        let c = run_campaign(&t, 1, &CampaignConfig::default()).unwrap();
        assert_eq!(c.records.len(), 1);
        assert_eq!(c.records[0].orbits, 1);
    }

    #[test]
    fn few_orbit_mode_agrees_with_full_mode() {
        for (t, max) in [
            (Tessellation::cubic(3).unwrap(), 64u64),
            (Tessellation::cubic(4).unwrap(), 16),
            (Tessellation::t3343(false), 8),
        ] {
            let k = default_max_orbits(&t);
            let full = run_campaign(&t, max, &CampaignConfig::default()).unwrap();
            let few = run_campaign(
                &t,
                max,
                &CampaignConfig {
                    mode: Some(CampaignMode::FewOrbit { max_orbits: k }),
                    ..Default::default()
                },
            )
            .unwrap();
            let expect: Vec<_> = full.records.iter().filter(|r| r.orbits <= k).cloned().collect();
            assert_eq!(few.records, expect, "{} max {max}", t.name());
        }
    }

    #[test]
    fn family_members_have_expected_index() {
        let n = 4;
        assert_eq!(n_orbit_family(1, n, 2, 3).unwrap().index(), 8 * 3);
        assert_eq!(n_orbit_family(2, n, 1, 3).unwrap().index(), 2 * 3);
        assert_eq!(n_orbit_family(3, n, 1, 3).unwrap().index(), 4 * 3);
        assert_eq!(n_orbit_family(4, n, 2, 4).unwrap().index(), 8 * 2);
        assert_eq!(n_orbit_family(5, n, 1, 4).unwrap().index(), 2 * 2);
        assert!(n_orbit_family(4, n, 1, 2).is_none());
        assert!(n_orbit_family(5, n, 1, 3).is_none());
    }

    #[test]
    fn report_round_trip() {
        let t = Tessellation::cubic(3).unwrap();
        let c = run_campaign(&t, 8, &CampaignConfig::default()).unwrap();
        let dir = std::env::temp_dir().join(format!("toroidlab-census-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let p1 = dir.join("a.jsonl");
        let p2 = dir.join("b.jsonl");
        write_report(&c, &p1).unwrap();
        write_report(&run_campaign(&t, 8, &CampaignConfig::default()).unwrap(), &p2).unwrap();
        assert_eq!(fs::read(&p1).unwrap(), fs::read(&p2).unwrap());
        let (records, summary) = read_report(&p1).unwrap();
        assert_eq!(records, c.records);
        assert_eq!(summary, c.summary());

        let empty = Campaign {
            records: Vec::new(),
            ..c
        };
        write_report(&empty, &p1).unwrap();
        let text = fs::read_to_string(&p1).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("{\"summary\""));
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn unknown_suite() {
        assert!(matches!(
            verify_theorem("nonexistent", &SuiteParams::default()),
            Err(CensusError::UnknownSuite(_))
        ));
    }
}
