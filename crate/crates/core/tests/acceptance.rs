//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_FAILURES` fail because the computed answer
//! disagrees with the published claim; the reason is printed with them.
//! The process exits with status 0 iff the failing set equals that list.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use toroidlab::census::{
    run_campaign, verify_theorem, CampaignConfig, CampaignMode, SuiteParams, VerificationReport,
};
use toroidlab::exact::{hnf, Matrix};
use toroidlab::group::{
    eta_projection, generate, group_3343, hyperoctahedral, low_index_subgroups, pgl25_generators, GroupElement,
    Subgroup,
};
use toroidlab::lattice::Lattice;
use toroidlab::stg::build_stg;
use toroidlab::toroid::{Tessellation, Toroid};

const KNOWN_FAILURES: [(usize, &str); 2] = [
    (
        8,
        "s*Lambda1 is equivalent to 2s*Z^4 under [3,4,3] and has 3 flag-orbits, so there are no 2-orbit classes",
    ),
    (
        9,
        "the {3,3,4,3} 3-orbit toroid with stabilizer of B4 type is 2-face-transitive (translations identify the two triangle types)",
    ),
];

struct Outcome {
    ok: bool,
    detail: String,
}

fn suite(name: &str, n: Option<usize>, max_index: Option<u64>) -> VerificationReport {
    let params = SuiteParams {
        n,
        max_index,
        config: CampaignConfig::default(),
    };
    verify_theorem(name, &params).expect("suite runs")
}

fn suites(runs: &[(&str, Option<usize>, Option<u64>)]) -> Outcome {
    let mut failed = Vec::new();
    for &(name, n, m) in runs {
        let r = suite(name, n, m);
        if !r.passed() {
            let notes: Vec<&str> = r.notes.iter().filter(|s| s.starts_with("FAILED")).map(String::as_str).collect();
            failed.push(format!("{name}: {}", notes.join("; ")));
        }
    }
    Outcome {
        ok: failed.is_empty(),
        detail: if failed.is_empty() {
            format!("{} suite run(s) passed", runs.len())
        } else {
            failed.join(" | ")
        },
    }
}

fn criterion_1() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for n in 3..=6 {
        let order = hyperoctahedral(n).order();
        let want = (1usize << n) * (1..=n).product::<usize>();
        ok &= order == want;
        detail.push(format!("|B{n}|={order}"));
    }
    let o = group_3343().order();
    ok &= o == 1152;
    detail.push(format!("|[3,4,3]|={o}"));
    let pgl = generate(&pgl25_generators(), 1000).unwrap();
    let triples: BTreeSet<(usize, usize, usize)> = pgl
        .elements()
        .iter()
        .map(|e| {
            let p = eta_projection(e).unwrap();
            (p.image(0), p.image(1), p.image(2))
        })
        .collect();
    ok &= pgl.order() == 120 && triples.len() == 120;
    detail.push(format!("|PGL2(5)|={}, sharply 3-transitive={}", pgl.order(), triples.len() == 120));
    Outcome {
        ok,
        detail: detail.join(", "),
    }
}

fn criterion_10() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x70_0a1d);
    let mut fails = Vec::new();

    // HNF idempotence and basis invariance.
    let mut bases = 0;
    while bases < 1000 {
        let n = rng.gen_range(2..=5);
        let b: Vec<Vec<i64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-6..=6)).collect()).collect();
        let Ok(l) = Lattice::from_basis(&b) else { continue };
        bases += 1;
        let (h, _) = hnf(&Matrix::from_int_rows(&l.row_vecs()).unwrap()).unwrap();
        if h.to_i64_rows().unwrap() != l.row_vecs() {
            fails.push("HNF not idempotent".to_string());
        }
        let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let mut c = b.clone();
        if i != j {
            let k = rng.gen_range(-3..=3);
            let rj = c[j].clone();
            c[i].iter_mut().zip(rj).for_each(|(x, y)| *x += k * y);
        }
        c.swap(0, n - 1);
        if Lattice::from_basis(&c).unwrap() != l {
            fails.push("HNF depends on the basis".to_string());
        }
    }

    // Central inversion.
    let mut lattices = 0;
    while lattices < 1000 {
        let n = rng.gen_range(3..=6);
        let b: Vec<Vec<i64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-4..=4)).collect()).collect();
        let Ok(l) = Lattice::from_basis(&b) else { continue };
        lattices += 1;
        if !l.is_invariant(&GroupElement::chi(n)).unwrap() {
            fails.push("lattice not chi-invariant".to_string());
        }
    }

    // Orbit counts under conjugation.
    let t = Tessellation::cubic(4).unwrap();
    let mut conj = 0;
    while conj < 100 {
        let b: Vec<Vec<i64>> = (0..4).map(|_| (0..4).map(|_| rng.gen_range(-3..=3)).collect()).collect();
        let Ok(l) = Lattice::from_basis(&b) else { continue };
        if l.index() > 64 {
            continue;
        }
        conj += 1;
        let g = t.point_group().element(rng.gen_range(0..t.point_group().order())).clone();
        let a = Toroid::new(&t, l.clone()).unwrap();
        let c = Toroid::new(&t, l.transform(&g).unwrap()).unwrap();
        if a.flag_orbit_count() != c.flag_orbit_count() || build_stg(&a).canonical_key() != build_stg(&c).canonical_key()
        {
            fails.push(format!("orbit count changed under conjugation of {l}"));
        }
    }

    // Layers of reflection-invariant census lattices.
    let mut layered = 0;
    let mut census_groups: Vec<Subgroup> = Vec::new();
    for (n, max) in [(3usize, 32u64), (4, 16)] {
        let t = Tessellation::cubic(n).unwrap();
        let c = run_campaign(&t, max, &CampaignConfig::default()).unwrap();
        for r in &c.records {
            let l = r.lattice();
            for axis in 0..n {
                let Ok(dec) = l.layer_decompose(axis) else { continue };
                layered += 1;
                let mut ok = dec.lambda0.index() * dec.d == l.index();
                for _ in 0..20 {
                    let v: Vec<i64> = (0..n).map(|_| rng.gen_range(-6..=6)).collect();
                    ok &= dec.reconstructs(&v) == l.contains(&v).unwrap();
                }
                for row in l.rows() {
                    ok &= dec.reconstructs(row);
                }
                if !ok {
                    fails.push(format!("layer reconstruction failed for {l} axis {axis}"));
                }
            }
            census_groups.push(Toroid::new(&t, l).unwrap().stabilizer().clone());
        }
    }

    // Projection inequality on every computed subgroup.
    let mut groups = census_groups;
    for n in [4, 5] {
        let g = Arc::new(hyperoctahedral(n));
        for j in 2..=4 {
            groups.extend(low_index_subgroups(&g, j, false).unwrap());
        }
    }
    for h in &groups {
        let n = h.parent().dim();
        let images: BTreeSet<_> = h.elements().map(|e| eta_projection(e).unwrap()).collect();
        let sn: usize = (1..=n).product();
        if h.index() < sn / images.len() {
            fails.push("projection inequality violated".to_string());
        }
    }

    Outcome {
        ok: fails.is_empty(),
        detail: if fails.is_empty() {
            format!(
                "1000 bases, 1000 lattices, 100 conjugations, {layered} layer decompositions, {} subgroups",
                groups.len()
            )
        } else {
            fails.join("; ")
        },
    }
}

fn criterion_4() -> Outcome {
    let mut out = suites(&[("cubic-2orbit", Some(4), Some(256)), ("cubic-3orbit-4d", Some(4), Some(256))]);
    // Cross-check: a forced few-orbit run reports the expected class counts.
    let t = Tessellation::cubic(4).unwrap();
    let cfg = CampaignConfig {
        mode: Some(CampaignMode::FewOrbit { max_orbits: 3 }),
        ..Default::default()
    };
    let c = run_campaign(&t, 256, &cfg).unwrap();
    let two: Vec<i64> = c.with_orbits(2).map(|r| r.index).collect();
    let three: Vec<i64> = c.with_orbits(3).map(|r| r.index).collect();
    let chiral = c.chiral_violations().len();
    if two != [16, 256] || three != [4, 64] || chiral != 0 {
        out.ok = false;
    }
    out.detail = format!("{}; 2-orbit indices {two:?}, 3-orbit indices {three:?}, chiral {chiral}", out.detail);
    out
}

fn main() -> ExitCode {
    type Criterion = (usize, &'static str, Duration, Box<dyn Fn() -> Outcome>);
    let criteria: Vec<Criterion> = vec![
        (1, "group orders", Duration::from_secs(10), Box::new(criterion_1)),
        (
            2,
            "index-2 subgroups of B4 and B5",
            Duration::from_secs(60),
            Box::new(|| suites(&[("index2-subgroups", Some(4), None), ("index2-subgroups", Some(5), None)])),
        ),
        (
            3,
            "index-3/4 subgroups of B5, index 3 in B4",
            Duration::from_secs(300),
            Box::new(|| suites(&[("index34-B5", None, None), ("index3-B4", None, None)])),
        ),
        (4, "cubic census n=4 to index 256", Duration::from_secs(600), Box::new(criterion_4)),
        (
            5,
            "cubic census n=5 to index 32",
            Duration::from_secs(900),
            Box::new(|| suites(&[("cubic-2orbit", Some(5), Some(32)), ("cubic-no-k", Some(5), Some(32))])),
        ),
        (
            6,
            "n-orbit families",
            Duration::from_secs(300),
            Box::new(|| suites(&[("cubic-n-orbit", Some(4), Some(2)), ("cubic-n-orbit", Some(5), Some(2))])),
        ),
        (
            7,
            "PGL2(5)-invariant lattices",
            Duration::from_secs(600),
            Box::new(|| suites(&[("pgl25-lattices", None, Some(8))])),
        ),
        (
            8,
            "{3,3,4,3} census to index 32",
            Duration::from_secs(600),
            Box::new(|| {
                suites(&[
                    ("t3343-2orbit", None, Some(32)),
                    ("t3343-no4", None, Some(32)),
                    ("t3343-3orbit", None, Some(32)),
                ])
            }),
        ),
        (9, "symmetry type graphs", Duration::from_secs(60), Box::new(|| suites(&[("stg-properties", None, None)]))),
        (10, "property suites", Duration::from_secs(120), Box::new(criterion_10)),
    ];

    let mut failing = BTreeSet::new();
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let mut out = run();
        let elapsed = start.elapsed();
        if elapsed > budget {
            out.ok = false;
            out.detail = format!("{} (over the {budget:?} budget)", out.detail);
        }
        let status = if out.ok { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {status}: {name} [{:.1}s] {}", elapsed.as_secs_f64(), out.detail);
        if !out.ok {
            failing.insert(id);
            if let Some((_, why)) = KNOWN_FAILURES.iter().find(|(k, _)| *k == id) {
                println!("             known failure: {why}");
            }
        }
    }
    let known: BTreeSet<usize> = KNOWN_FAILURES.iter().map(|(k, _)| *k).collect();
    println!("failing criteria: {failing:?}; known failures: {known:?}");
    if failing == known {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
