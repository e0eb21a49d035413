//! Workbench binary over the graph complex and the relative coinvariant
//! complex: enumeration, matrices, homology dimensions, chord diagrams, and
//! the cross-complex verification battery. Results of the pure commands are
//! cached as JSON documents keyed by a content hash of the command, its
//! parameters, and the artifact version.

use std::cmp::min;
use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use gh_core::ce::coinvariant_quotient;
use gh_core::chords::enumerate_chords;
use gh_core::graph::enumerate_graphs;
use gh_core::graph_complex::{boundary_matrix, graph_betti};
use gh_core::poisson::SuperDim;
use gh_core::verify::{
    betti_match, verify_chain_map, verify_duality, verify_left_inverse, verify_right_inverse,
    RelativeCache, SignDefect, VerificationReport,
};

/// Cache payloads from older builds are never reused.
const ARTIFACT_VERSION: &str = concat!("ghw-", env!("CARGO_PKG_VERSION"));

/// Bidegrees past the desk-scale defaults still run, with a runtime warning.
const DESK_MAX_J: usize = 6;

#[derive(Parser)]
#[command(
    name = "ghw",
    version,
    about = "Graph homology workbench",
    long_about = "Enumerates graph classes, assembles boundary and coinvariant differential \
                  matrices, computes homology dimensions on both sides, and verifies the \
                  chord-diagram correspondence between them."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Directory for cached results; GH_CACHE_DIR is used when unset, and
    /// caching is disabled when neither is given.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,

    /// Output format; csv is limited to the scalar summary of each result.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// List the nonzero graph classes with the given vertex and edge counts
    Enumerate {
        /// Vertex count
        #[arg(short = 'i', long)]
        vertices: usize,
        /// Edge count
        #[arg(short = 'j', long)]
        edges: usize,
    },
    /// Boundary matrix out of one graph bidegree, by edge contraction
    Boundary {
        /// Vertex count of the source bidegree
        #[arg(short = 'i', long)]
        vertices: usize,
        /// Edge count of the source bidegree
        #[arg(short = 'j', long)]
        edges: usize,
    },
    /// Graph homology dimensions at one bidegree
    Homology {
        /// Vertex count
        #[arg(short = 'i', long)]
        vertices: usize,
        /// Edge count
        #[arg(short = 'j', long)]
        edges: usize,
    },
    /// Basis of the coinvariant wedge space of length i and order 2j
    CeBasis {
        /// Even coordinate pairs
        #[arg(long, default_value_t = 3)]
        n: u16,
        /// Odd coordinates
        #[arg(long, default_value_t = 0)]
        m: u16,
        /// Word length (matches the graph vertex count)
        #[arg(short = 'i', long)]
        vertices: usize,
        /// Half the word order (matches the graph edge count)
        #[arg(short = 'j', long)]
        edges: usize,
    },
    /// Coinvariant differential matrix out of length i, order 2j
    CeMatrix {
        /// Even coordinate pairs
        #[arg(long, default_value_t = 3)]
        n: u16,
        /// Odd coordinates
        #[arg(long, default_value_t = 0)]
        m: u16,
        /// Word length (matches the graph vertex count)
        #[arg(short = 'i', long)]
        vertices: usize,
        /// Half the word order (matches the graph edge count)
        #[arg(short = 'j', long)]
        edges: usize,
    },
    /// List the chord diagrams on 2j points
    Chords {
        /// Number of chords
        #[arg(short = 'j', long)]
        edges: usize,
    },
    /// Run the verification battery over all bidegrees up to a bound
    Verify {
        /// Scope of the battery; only "all" is defined
        #[arg(default_value = "all")]
        what: String,
        /// Even coordinate pairs
        #[arg(long, default_value_t = 3)]
        n: u16,
        /// Odd coordinates
        #[arg(long, default_value_t = 0)]
        m: u16,
        /// Largest edge count checked (default: the stable bound min(n, 3))
        #[arg(long)]
        max_j: Option<usize>,
        /// Deliberately corrupt one sign to confirm the battery trips
        #[arg(long, value_parser = parse_defect)]
        inject_sign_error: Option<SignDefect>,
    },
}

fn parse_defect(s: &str) -> Result<SignDefect, String> {
    s.parse()
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let cache = Cache {
        dir: cli
            .cache_dir
            .clone()
            .or_else(|| std::env::var_os("GH_CACHE_DIR").map(PathBuf::from)),
    };
    match &cli.command {
        Command::Enumerate { vertices, edges } => {
            warn_desk_scale(*edges);
            let payload = cache.get_or_compute(
                "enumerate",
                &format!("i={vertices} j={edges}"),
                || {
                    let classes = enumerate_graphs(*vertices, *edges);
                    json!({
                        "i": vertices,
                        "j": edges,
                        "count": classes.len(),
                        "classes": classes.iter().map(|c| c.graph().to_json()).collect::<Vec<_>>(),
                    })
                },
            );
            emit(cli.format, &payload, render_enumerate)
        }
        Command::Boundary { vertices, edges } => {
            warn_desk_scale(*edges);
            let payload = cache.get_or_compute(
                "boundary",
                &format!("i={vertices} j={edges}"),
                || {
                    let matrix = boundary_matrix(*vertices, *edges);
                    json!({
                        "i": vertices,
                        "j": edges,
                        "source_dim": matrix.cols(),
                        "target_dim": matrix.rows(),
                        "rank": matrix.rank(),
                        "matrix": matrix.to_json(),
                    })
                },
            );
            emit(cli.format, &payload, render_matrix_summary)
        }
        Command::Homology { vertices, edges } => {
            warn_desk_scale(*edges);
            let payload = cache.get_or_compute(
                "homology",
                &format!("i={vertices} j={edges}"),
                || serde_json::to_value(graph_betti(*vertices, *edges)).expect("serializable"),
            );
            emit(cli.format, &payload, render_homology)
        }
        Command::CeBasis { n, m, vertices, edges } => {
            let d = SuperDim::new(*n, *m);
            let payload = cache.get_or_compute(
                "ce-basis",
                &format!("n={n} m={m} i={vertices} j={edges}"),
                || coinvariant_quotient(d, *vertices, 2 * edges).to_json(),
            );
            emit(cli.format, &payload, render_ce_basis)
        }
        Command::CeMatrix { n, m, vertices, edges } => {
            let d = SuperDim::new(*n, *m);
            let payload = cache.get_or_compute(
                "ce-matrix",
                &format!("n={n} m={m} i={vertices} j={edges}"),
                || {
                    let mut cache = RelativeCache::new(d);
                    let matrix = cache.differential(*vertices, 2 * edges);
                    json!({
                        "n": n,
                        "m": m,
                        "i": vertices,
                        "j": edges,
                        "source_dim": matrix.cols(),
                        "target_dim": matrix.rows(),
                        "rank": matrix.rank(),
                        "matrix": matrix.to_json(),
                    })
                },
            );
            emit(cli.format, &payload, render_matrix_summary)
        }
        Command::Chords { edges } => {
            let payload = cache.get_or_compute("chords", &format!("j={edges}"), || {
                let diagrams = enumerate_chords(*edges);
                json!({
                    "j": edges,
                    "count": diagrams.len(),
                    "diagrams": diagrams
                        .iter()
                        .map(|c| c.pairs().iter().map(|&(a, b)| json!([a, b])).collect::<Vec<_>>())
                        .collect::<Vec<_>>(),
                })
            });
            emit(cli.format, &payload, render_chords)
        }
        Command::Verify { what, n, m, max_j, inject_sign_error } => {
            if what != "all" {
                bail!("unknown verify scope {what:?}; only \"all\" is defined");
            }
            run_verify(&cli, *n, *m, *max_j, *inject_sign_error)
        }
    }
}

fn warn_desk_scale(j: usize) {
    if j > DESK_MAX_J {
        eprintln!(
            "warning: edge count {j} is past the desk-scale bound {DESK_MAX_J}; \
             runtime grows steeply with j"
        );
    }
}

// ---------------------------------------------------------------------------
// Cache

struct Cache {
    dir: Option<PathBuf>,
}

impl Cache {
    /// Returns the serialized payload for (command, params), from the cache
    /// when a valid entry exists, computing and persisting it otherwise. A
    /// hit is byte-identical to recomputation because serialization is
    /// deterministic and the stored bytes are returned verbatim; corrupted
    /// entries are recomputed and overwritten; an unwritable cache directory
    /// downgrades to plain computation with a warning.
    fn get_or_compute(&self, command: &str, params: &str, producer: impl FnOnce() -> Value) -> String {
        let dir = match &self.dir {
            Some(dir) => dir,
            None => return serialize(producer()),
        };
        let mut hasher = Sha256::new();
        hasher.update(ARTIFACT_VERSION.as_bytes());
        hasher.update(b"\n");
        hasher.update(command.as_bytes());
        hasher.update(b"\n");
        hasher.update(params.as_bytes());
        let key: String = hasher.finalize().iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        });
        let path = dir.join(format!("{key}.json"));
        if let Ok(bytes) = std::fs::read(&path) {
            if let Ok(text) = String::from_utf8(bytes) {
                if serde_json::from_str::<Value>(&text).is_ok() {
                    return text;
                }
            }
            eprintln!("warning: discarding corrupted cache entry {}", path.display());
        }
        let payload = serialize(producer());
        // Write-temp-then-rename keeps concurrent writers of the same key
        // atomic: both produce identical bytes and the last rename wins.
        let write = || -> std::io::Result<()> {
            std::fs::create_dir_all(dir)?;
            let tmp = dir.join(format!(".{key}.tmp.{}", std::process::id()));
            std::fs::write(&tmp, &payload)?;
            std::fs::rename(&tmp, &path)
        };
        if let Err(e) = write() {
            eprintln!("warning: cache write to {} failed ({e}); continuing uncached", path.display());
        }
        payload
    }
}

fn serialize(v: Value) -> String {
    let mut s = serde_json::to_string_pretty(&v).expect("serializable");
    s.push('\n');
    s
}

// ---------------------------------------------------------------------------
// Rendering

/// Prints the payload: verbatim bytes for json, a per-command rendering for
/// text, and a scalar-summary table for csv.
fn emit(format: Format, payload: &str, render: fn(Format, &Value) -> String) -> Result<()> {
    match format {
        Format::Json => print!("{payload}"),
        _ => {
            let v: Value = serde_json::from_str(payload).expect("emitted payloads parse");
            print!("{}", render(format, &v));
        }
    }
    Ok(())
}

fn render_enumerate(format: Format, v: &Value) -> String {
    let (i, j, count) = (&v["i"], &v["j"], &v["count"]);
    if format == Format::Csv {
        return format!("i,j,count\n{i},{j},{count}\n");
    }
    let mut out = format!("{count} classes at ({i}, {j})\n");
    for class in v["classes"].as_array().expect("class list") {
        let _ = writeln!(out, "  vertices {} edges {}", class["vertices"], class["edges"]);
    }
    out
}

fn render_matrix_summary(format: Format, v: &Value) -> String {
    let (src, tgt, rank) = (&v["source_dim"], &v["target_dim"], &v["rank"]);
    let scope = if v["n"].is_null() {
        (format!("({}, {})", v["i"], v["j"]), "i,j".to_string(), format!("{},{}", v["i"], v["j"]))
    } else {
        (
            format!("n={} m={} ({}, {})", v["n"], v["m"], v["i"], v["j"]),
            "n,m,i,j".to_string(),
            format!("{},{},{},{}", v["n"], v["m"], v["i"], v["j"]),
        )
    };
    if format == Format::Csv {
        return format!("{},source_dim,target_dim,rank\n{},{src},{tgt},{rank}\n", scope.1, scope.2);
    }
    format!("differential at {}: {src} columns, {tgt} rows, rank {rank}\n", scope.0)
}

fn render_homology(format: Format, v: &Value) -> String {
    let (i, j, dim, rank, betti) = (&v["i"], &v["j"], &v["dim"], &v["rank_d"], &v["betti"]);
    if format == Format::Csv {
        return format!("i,j,dim,rank_d,betti\n{i},{j},{dim},{rank},{betti}\n");
    }
    format!("({i}, {j}): dim {dim}, boundary rank {rank}, betti {betti}\n")
}

fn render_ce_basis(format: Format, v: &Value) -> String {
    let (n, m, i, order) = (&v["n"], &v["m"], &v["i"], &v["order"]);
    let (ambient, dim) = (&v["ambient_dim"], &v["dim"]);
    if format == Format::Csv {
        return format!(
            "n,m,i,order,ambient_dim,dim\n{n},{m},{i},{order},{ambient},{dim}\n"
        );
    }
    let mut out = format!(
        "n={n} m={m} length {i} order {order}: ambient {ambient}, coinvariant dim {dim}\n"
    );
    for w in v["selected"].as_array().expect("selected list") {
        let _ = writeln!(out, "  {}", w.as_str().expect("word string"));
    }
    out
}

fn render_chords(format: Format, v: &Value) -> String {
    let (j, count) = (&v["j"], &v["count"]);
    if format == Format::Csv {
        return format!("j,count\n{j},{count}\n");
    }
    let mut out = format!("{count} diagrams on {j} chords\n");
    for diagram in v["diagrams"].as_array().expect("diagram list") {
        let mut line = String::from("  ");
        for pair in diagram.as_array().expect("pair list") {
            let _ = write!(line, "({} {})", pair[0], pair[1]);
        }
        let _ = writeln!(out, "{line}");
    }
    out
}

// ---------------------------------------------------------------------------
// Verification battery

/// Per bidegree (i, j) with j <= max_j: both complexes square to zero and the
/// chain map commutes; inside the stable range j <= n also the duality
/// matrix, both inverse identities, and the homology comparison. Exit status
/// 0 exactly when every executed check passes.
fn run_verify(
    cli: &Cli,
    n: u16,
    m: u16,
    max_j: Option<usize>,
    defect: Option<SignDefect>,
) -> Result<()> {
    let d = SuperDim::new(n, m);
    let stable = n as usize;
    let max_j = max_j.unwrap_or_else(|| min(stable, 3));
    if max_j > 3 {
        eprintln!("warning: max j {max_j} is past the desk-scale bound 3; runtime grows steeply");
    }
    let mut cache = RelativeCache::new(d);
    let mut reports: Vec<VerificationReport> = Vec::new();
    for j in 1..=max_j {
        for i in 1..=(2 * j / 3) {
            reports.push(graph_squared_report(d, i, j));
            reports.push(ce_squared_report(&mut cache, i, j));
            reports.push(verify_chain_map(d, i, j, defect));
            if j <= stable {
                reports.push(verify_left_inverse(d, i, j, defect).expect("guarded by j <= n"));
                reports.push(verify_right_inverse(d, i, j, defect).expect("guarded by j <= n"));
                reports.push(betti_report(&mut cache, i, j));
            }
        }
        if j <= stable {
            reports.push(verify_duality(d, j).expect("guarded by j <= n"));
        } else {
            eprintln!(
                "warning: skipping duality, inverse, and homology-comparison checks at j = {j}: \
                 outside the stable range j <= n = {n}"
            );
        }
    }
    let passed = reports.iter().all(|r| r.passed());
    match cli.format {
        Format::Json => {
            let v = json!({
                "reports": reports,
                "passed": passed,
            });
            print!("{}", serialize(v));
        }
        Format::Csv => {
            let mut out = String::from("check,n,m,i,j,ambient_dim,failures,elapsed_ms\n");
            for r in &reports {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    r.check, r.n, r.m, r.i, r.j, r.ambient_dim, r.failures, r.elapsed_ms
                );
            }
            print!("{out}");
        }
        Format::Text => {
            for r in &reports {
                println!(
                    "{} {} at n={} m={} (i, j)=({}, {}): walked {}, failures {} [{} ms]",
                    if r.passed() { "pass" } else { "FAIL" },
                    r.check,
                    r.n,
                    r.m,
                    r.i,
                    r.j,
                    r.ambient_dim,
                    r.failures,
                    r.elapsed_ms
                );
            }
            println!(
                "{}",
                if passed { "all checks passed" } else { "some checks FAILED" }
            );
        }
    }
    if !passed {
        std::process::exit(1);
    }
    Ok(())
}

/// Contracting twice is zero: the matrix product of consecutive boundary
/// maps vanishes. Failures count the nonzero entries of the product.
fn graph_squared_report(d: SuperDim, i: usize, j: usize) -> VerificationReport {
    let start = std::time::Instant::now();
    let into = boundary_matrix(i + 1, j + 1);
    let out = boundary_matrix(i, j);
    let product = out.matmul(&into).expect("consecutive bidegrees compose");
    VerificationReport {
        n: d.n,
        m: d.m,
        i,
        j,
        check: "graph_boundary_squared".into(),
        ambient_dim: into.cols(),
        failures: product.nnz(),
        elapsed_ms: start.elapsed().as_millis(),
    }
}

/// Same identity for the coinvariant differential at word length i, order 2j.
fn ce_squared_report(cache: &mut RelativeCache, i: usize, j: usize) -> VerificationReport {
    let d = cache.d();
    let start = std::time::Instant::now();
    let into = cache.differential(i + 1, 2 * j + 2);
    let out = cache.differential(i, 2 * j);
    let product = out.matmul(&into).expect("consecutive bidegrees compose");
    VerificationReport {
        n: d.n,
        m: d.m,
        i,
        j,
        check: "ce_differential_squared".into(),
        ambient_dim: into.cols(),
        failures: product.nnz(),
        elapsed_ms: start.elapsed().as_millis(),
    }
}

/// Graph homology at (i, j) against coinvariant homology at (i, 2j); one
/// failure when the dimensions disagree.
fn betti_report(cache: &mut RelativeCache, i: usize, j: usize) -> VerificationReport {
    let d = cache.d();
    let start = std::time::Instant::now();
    let (graph, ce, equal) = betti_match(cache, i, j);
    VerificationReport {
        n: d.n,
        m: d.m,
        i,
        j,
        check: "betti_match".into(),
        ambient_dim: graph.max(ce),
        failures: usize::from(!equal),
        elapsed_ms: start.elapsed().as_millis(),
    }
}
