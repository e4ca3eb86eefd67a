use std::fmt::Display;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use toroidlab::census::{
    self, family_of, run_campaign, verify_theorem, write_records, write_verification, CampaignConfig, CampaignMode,
    SuiteParams,
};
use toroidlab::lattice::{parse_named_spec, Lattice};
use toroidlab::stg::build_stg;
use toroidlab::toroid::{Tessellation, Toroid};

#[derive(Parser)]
#[command(name = "toroidlab", version, about = "Flag-orbit analysis of equivelar toroids")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Orbit count, 2-orbit class, stabilizer order and family of one toroid.
    Analyze {
        #[command(flatten)]
        tess: TessArgs,
        #[command(flatten)]
        source: LatticeSource,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Lists isomorphism classes of toroids up to an index bound.
    Enumerate {
        #[command(flatten)]
        tess: TessArgs,
        /// Largest index in the vertex lattice.
        #[arg(long, value_parser = parse_bound)]
        max_index: u64,
        /// JSON Lines output file.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Only list classes with at most this many flag-orbits.
        #[arg(long)]
        max_orbits: Option<usize>,
    },
    /// Runs a theorem-verification suite.
    Verify {
        #[arg(long)]
        suite: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_parser = parse_bound)]
        max_index: Option<u64>,
        /// JSON report file.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Emits the symmetry type graph of a toroid.
    Stg {
        #[command(flatten)]
        tess: TessArgs,
        #[command(flatten)]
        source: LatticeSource,
        #[arg(long, value_enum, default_value_t = Format::Dot)]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct TessArgs {
    /// `cubic`, `3343` or `3433`.
    #[arg(long, default_value = "cubic")]
    tess: String,
    /// Rank of the tessellation; {3,3,4,3} requires 4.
    #[arg(long)]
    n: Option<usize>,
}

impl TessArgs {
    fn build(&self) -> Result<Arc<Tessellation>, String> {
        let n = self.n.unwrap_or(4);
        Tessellation::parse(&self.tess, n).map_err(|e| e.to_string())
    }
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct LatticeSource {
    /// Named lattice such as `lambda1` or `fcln@2`.
    #[arg(long)]
    lattice: Option<String>,
    /// Inline basis rows as JSON, e.g. `[[1,0],[0,2]]`.
    #[arg(long)]
    basis: Option<String>,
    /// Lattice JSON file (`{"n", "hnf", "index"}`).
    #[arg(long)]
    lattice_file: Option<PathBuf>,
}

impl LatticeSource {
    fn load(&self, n: usize) -> Result<Lattice, String> {
        if let Some(spec) = &self.lattice {
            return parse_named_spec(spec, n).map_err(|e| e.to_string());
        }
        if let Some(rows) = &self.basis {
            let rows: Vec<Vec<i64>> = serde_json::from_str(rows).map_err(|e| format!("basis: {e}"))?;
            return Lattice::from_basis(&rows).map_err(|e| e.to_string());
        }
        let path = self.lattice_file.as_ref().expect("one source is required");
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Dot,
}

/// Accepts plain integers and `a^b`.
fn parse_bound(s: &str) -> Result<u64, String> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('^') {
        let a: u64 = a.parse().map_err(|e| format!("{e}"))?;
        let b: u32 = b.parse().map_err(|e| format!("{e}"))?;
        return a.checked_pow(b).ok_or_else(|| "bound overflows".to_string());
    }
    s.parse().map_err(|e| format!("{e}"))
}

enum Failure {
    Usage(String),
    Verification,
}

fn usage(e: impl Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn load_toroid(tess: &TessArgs, source: &LatticeSource) -> Result<Toroid, Failure> {
    let t = tess.build().map_err(usage)?;
    let l = source.load(t.n()).map_err(usage)?;
    if l.dim() != t.n() {
        return Err(usage(format!("lattice has dimension {}, tessellation needs {}", l.dim(), t.n())));
    }
    Toroid::new(&t, l).map_err(usage)
}

fn emit(output: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match output {
        Some(p) => fs::write(p, text).map_err(|e| usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn class_string(labels: impl IntoIterator<Item = usize>) -> String {
    let parts: Vec<String> = labels.into_iter().map(|i| i.to_string()).collect();
    format!("2_{{{}}}", parts.join(","))
}

fn analyze(tess: &TessArgs, source: &LatticeSource, format: Format) -> Result<(), Failure> {
    let toroid = load_toroid(tess, source)?;
    let t = toroid.tessellation();
    let family = family_of(t, toroid.lattice());
    match format {
        Format::Json => {
            let mut v = toroid.to_json();
            v["stabilizer_order"] = serde_json::json!(toroid.stabilizer().order());
            v["index"] = serde_json::json!(t.relative_index(toroid.lattice()));
            v["family"] = serde_json::json!(family);
            println!("{}", serde_json::to_string_pretty(&v).expect("json"));
        }
        Format::Text | Format::Dot => {
            let orbits = toroid.flag_orbit_count();
            match toroid.two_orbit_class() {
                Ok(c) => println!("orbits: {orbits}, class: {}", class_string(c)),
                Err(_) => println!("orbits: {orbits}"),
            }
            println!("tessellation: {} (n = {})", t.name(), t.n());
            println!("lattice: {}", toroid.lattice());
            println!("index: {}", t.relative_index(toroid.lattice()));
            println!("stabilizer order: {}", toroid.stabilizer().order());
            println!("family: {}", family.as_deref().unwrap_or("none"));
        }
    }
    Ok(())
}

fn enumerate(tess: &TessArgs, max_index: u64, output: &Option<PathBuf>, max_orbits: Option<usize>) -> Result<(), Failure> {
    let t = tess.build().map_err(usage)?;
    let mut cfg = CampaignConfig::from_env();
    cfg.mode = max_orbits.map(|k| CampaignMode::FewOrbit { max_orbits: k });
    let start = Instant::now();
    let campaign = run_campaign(&t, max_index, &cfg).map_err(usage)?;
    if let Some(p) = output {
        census::write_report(&campaign, p).map_err(usage)?;
    }
    let summary = campaign.summary();
    println!("tessellation: {} (n = {}), max index {}", summary.tess, summary.n, summary.max_index);
    match campaign.mode {
        CampaignMode::Full => println!("mode: full"),
        CampaignMode::FewOrbit { max_orbits } => println!("mode: few-orbit (at most {max_orbits} flag-orbits)"),
    }
    let top = summary.orbits.keys().copied().max().unwrap_or(0).max(t.n());
    for k in 1..=top {
        let count = summary.orbits.get(&k).copied().unwrap_or(0);
        if !campaign.complete_for(k) {
            if k <= t.n() {
                println!("orbits={k}: not enumerated");
            }
        } else if count > 0 || k <= t.n() {
            println!("orbits={k}: {count} {}", if count == 1 { "class" } else { "classes" });
        }
    }
    let chiral = campaign.chiral_violations().len();
    println!("chirality sentinel: {chiral} violation(s)");
    if let Some(ok) = campaign.partition_ok {
        println!("partition check: {}", if ok { "ok" } else { "FAILED" });
    }
    if output.is_none() && campaign.records.len() <= 64 {
        let mut buf = Vec::new();
        write_records(&mut buf, &campaign).map_err(usage)?;
        print!("{}", String::from_utf8(buf).expect("utf-8"));
    }
    eprintln!("runtime: {} ms", start.elapsed().as_millis());
    Ok(())
}

fn verify(suite: &str, n: Option<usize>, max_index: Option<u64>, output: &Option<PathBuf>) -> Result<(), Failure> {
    let params = SuiteParams {
        n,
        max_index,
        config: CampaignConfig::from_env(),
    };
    let report = verify_theorem(suite, &params).map_err(usage)?;
    println!("suite {}: {}", report.suite, if report.passed() { "PASS" } else { "FAIL" });
    for note in &report.notes {
        println!("  {note}");
    }
    for c in &report.counterexamples {
        println!("  counterexample: {}", serde_json::to_string(c).expect("json"));
    }
    eprintln!("runtime: {} ms", report.runtime_ms);
    if let Some(p) = output {
        write_verification(&report, p).map_err(usage)?;
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn stg(tess: &TessArgs, source: &LatticeSource, format: Format, output: &Option<PathBuf>) -> Result<(), Failure> {
    let toroid = load_toroid(tess, source)?;
    let g = build_stg(&toroid);
    let text = match format {
        Format::Dot => g.to_dot(),
        Format::Json => {
            let mut v = serde_json::to_value(g.to_json()).expect("json");
            v["semi_edges"] = serde_json::json!(g.semi_edges(0));
            v["key"] = serde_json::json!(g.canonical_key());
            serde_json::to_string_pretty(&v).expect("json") + "\n"
        }
        Format::Text => {
            let mut s = format!("vertices: {}\nkey: {}\n", g.vertex_count(), g.canonical_key());
            for (u, v, i) in g.edges() {
                s.push_str(&format!("{u} -{i}- {v}\n"));
            }
            s
        }
    };
    emit(output, &text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Analyze { tess, source, format } => analyze(tess, source, *format),
        Command::Enumerate {
            tess,
            max_index,
            output,
            max_orbits,
        } => enumerate(tess, *max_index, output, *max_orbits),
        Command::Verify {
            suite,
            n,
            max_index,
            output,
        } => verify(suite, *n, *max_index, output),
        Command::Stg {
            tess,
            source,
            format,
            output,
        } => stg(tess, source, *format, output),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
