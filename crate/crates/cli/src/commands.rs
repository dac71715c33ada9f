use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use lra_core::assignment::{simulate_grid, Scenario};
use lra_core::codec::{
    decode, encode, load_basis, read_codes, save_basis, write_codes, CodeRecord, OrthanchorBasis,
};
use lra_core::geometry::Point;
use lra_core::robustness::{
    dim_sweep, evaluate_corpus, fit_basis, generalization_check, importance_profile, load_corpus,
    noise_benchmark, Corpus, CorpusSpec, Report,
};
use lra_core::subspace::{build_matrix, orthonormality_error, write_trace_csv};
use lra_core::LraError;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

type CmdResult = Result<(), CliError>;

fn load(spec: &CorpusSpec) -> Result<Corpus, CliError> {
    let corpus = load_corpus(spec)?;
    if !corpus.diagnostics.is_empty() {
        eprintln!(
            "{}: {} ingestion diagnostics",
            spec.id(),
            corpus.diagnostics.len()
        );
        for d in &corpus.diagnostics {
            eprintln!("  {d}");
        }
    }
    Ok(corpus)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| {
        CliError::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Timing lives only in this sidecar so the payload files stay byte-identical across reruns.
fn write_log(path: &Path, command: &str, started: Instant) -> CmdResult {
    let mut w = create(path)?;
    let unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    writeln!(w, "command = {command}")?;
    writeln!(w, "finished_unix = {unix}")?;
    writeln!(w, "wall_time_s = {:.6}", started.elapsed().as_secs_f64())?;
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    command: &'a str,
    config: &'a RunConfig,
    config_hash: String,
    inputs: std::collections::BTreeMap<&'a str, String>,
    report: &'a T,
}

/// Writes `<out>.csv`, `<out>.json`, optional `<out>.contours.csv`, and the `<out>.log` sidecar.
fn emit_report(
    command: &str,
    cfg: &RunConfig,
    inputs: Vec<(&str, String)>,
    report: &Report,
    out: &Path,
    started: Instant,
) -> CmdResult {
    let mut csv = create(&with_suffix(out, ".csv"))?;
    report.write_csv(&mut csv)?;
    csv.flush()?;

    let mut json = create(&with_suffix(out, ".json"))?;
    let env = Envelope {
        command,
        config: cfg,
        config_hash: cfg.hash(),
        inputs: inputs.into_iter().collect(),
        report,
    };
    serde_json::to_writer_pretty(&mut json, &env)?;
    json.write_all(b"\n")?;
    json.flush()?;

    if !report.per_contour.is_empty() {
        let mut pc = create(&with_suffix(out, ".contours.csv"))?;
        report.write_per_contour_csv(&mut pc)?;
        pc.flush()?;
    }
    write_log(&with_suffix(out, ".log"), command, started)?;
    print!("{}", report.summary_table());
    Ok(())
}

fn path_input(name: &'static str, p: Option<&Path>) -> Vec<(&'static str, String)> {
    p.map(|p| vec![(name, p.display().to_string())])
        .unwrap_or_default()
}

fn check_basis_vertices(basis: &OrthanchorBasis, cfg: &RunConfig, basis_path: &Path) -> CmdResult {
    if basis.n_vertices() != cfg.n_vertices {
        return Err(LraError::ShapeMismatch(format!(
            "basis {} has n_vertices = {} but the corpus is configured with n_vertices = {}",
            basis_path.display(),
            basis.n_vertices(),
            cfg.n_vertices
        ))
        .into());
    }
    Ok(())
}

pub fn fit(cfg: &RunConfig, corpus: Option<&Path>, out: &Path, trace: Option<&Path>) -> CmdResult {
    let started = Instant::now();
    let spec = cfg.corpus(corpus);
    let corpus = load(&spec)?;
    let a = build_matrix(&corpus.contours, spec.canonicalization)?;
    let (mut basis, result) = fit_basis(&a, cfg.m, cfg.method, &cfg.fms(), &spec.id())?;
    basis
        .provenance
        .params
        .insert("config_hash".into(), cfg.hash());
    basis
        .provenance
        .params
        .insert("corpus_hash".into(), spec.hash());
    save_basis(&basis, out)?;
    if let Some(t) = trace {
        let mut w = create(t)?;
        write_trace_csv(&result.trace, &mut w)?;
        w.flush()?;
    }
    let elapsed = started.elapsed().as_secs_f64();
    write_log(&with_suffix(out, ".log"), "fit", started)?;
    println!("method: {}", cfg.method);
    println!("contours: {}", corpus.len());
    println!("iterations: {}", result.iterations);
    println!("converged: {}", result.converged);
    println!("final objective: {:.9e}", result.objective());
    println!("wall time: {elapsed:.3} s");
    Ok(())
}

pub fn encode_cmd(
    cfg: &RunConfig,
    basis_path: &Path,
    corpus: Option<&Path>,
    out: &Path,
) -> CmdResult {
    let basis = load_basis(basis_path)?;
    check_basis_vertices(&basis, cfg, basis_path)?;
    let corpus = load(&cfg.corpus(corpus))?;
    let records = corpus
        .ids
        .iter()
        .zip(&corpus.contours)
        .map(|(id, c)| {
            let code = encode(&basis, c)?;
            Ok(CodeRecord {
                id: id.clone(),
                coefficients: code.coefficients,
                frame: code.frame,
            })
        })
        .collect::<Result<Vec<_>, LraError>>()?;
    let mut w = create(out)?;
    write_codes(&records, &mut w)?;
    w.flush()?;
    println!("encoded {} contours with M = {}", records.len(), basis.m());
    Ok(())
}

#[derive(Serialize)]
struct PolygonRecord {
    id: String,
    polygons: Vec<Vec<Point>>,
}

pub fn decode_cmd(basis_path: &Path, codes: &Path, out: &Path) -> CmdResult {
    let basis = load_basis(basis_path)?;
    let records = read_codes(BufReader::new(File::open(codes)?))?;
    let mut w = create(out)?;
    for r in &records {
        let contour = decode(
            &basis,
            &lra_core::codec::ShapeCode {
                coefficients: r.coefficients.clone(),
                frame: r.frame,
            },
        )
        .map_err(|e| LraError::ShapeMismatch(format!("code {}: {e}", r.id)))?;
        serde_json::to_writer(
            &mut w,
            &PolygonRecord {
                id: r.id.clone(),
                polygons: vec![contour.points().to_vec()],
            },
        )?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    println!("decoded {} codes", records.len());
    Ok(())
}

/// Basis path plus the SHA-256 of its bytes.
fn basis_inputs(path: &Path) -> Result<Vec<(&'static str, String)>, CliError> {
    let bytes = std::fs::read(path)?;
    Ok(vec![
        ("basis", path.display().to_string()),
        ("basis_sha256", hex::encode(Sha256::digest(&bytes))),
    ])
}

pub fn eval(cfg: &RunConfig, basis_path: &Path, corpus: Option<&Path>, out: &Path) -> CmdResult {
    let started = Instant::now();
    let basis = load_basis(basis_path)?;
    check_basis_vertices(&basis, cfg, basis_path)?;
    let c = load(&cfg.corpus(corpus))?;
    let report = evaluate_corpus(&c, &basis, &cfg.settings())?;
    let mut inputs = basis_inputs(basis_path)?;
    inputs.extend(path_input("corpus", corpus));
    emit_report("eval", cfg, inputs, &report, out, started)
}

pub fn sweep(cfg: &RunConfig, corpus: Option<&Path>, out: &Path) -> CmdResult {
    let started = Instant::now();
    let c = load(&cfg.corpus(corpus))?;
    let report = dim_sweep(&c, &cfg.dims, cfg.method, &cfg.settings())?;
    emit_report(
        "sweep",
        cfg,
        path_input("corpus", corpus),
        &report,
        out,
        started,
    )
}

pub fn noise(cfg: &RunConfig, corpus: Option<&Path>, out: &Path) -> CmdResult {
    let started = Instant::now();
    let c = load(&cfg.corpus(corpus))?;
    let report = noise_benchmark(&c, &cfg.noise(), cfg.m, &cfg.settings())?;
    emit_report(
        "noise",
        cfg,
        path_input("corpus", corpus),
        &report,
        out,
        started,
    )
}

pub fn generalize(
    cfg: &RunConfig,
    corpus: Option<&Path>,
    eval_corpus: Option<&Path>,
    out: &Path,
) -> CmdResult {
    let started = Instant::now();
    let fit = load(&cfg.corpus(corpus))?;
    let held = load(&cfg.eval_corpus(eval_corpus))?;
    let report = generalization_check(&fit, &held, cfg.m, cfg.method, &cfg.settings())?;
    let mut inputs = path_input("corpus", corpus);
    inputs.extend(path_input("eval_corpus", eval_corpus));
    emit_report("generalize", cfg, inputs, &report, out, started)
}

#[derive(Serialize)]
struct AssignmentDump<'a> {
    scenario: &'a Scenario,
    complete: bool,
    assignment: &'a lra_core::assignment::Assignment,
    text_region_cells: Vec<usize>,
    scores: &'a [f64],
}

pub fn assign_sim(scenario_path: &Path, out: &Path) -> CmdResult {
    let started = Instant::now();
    let text = std::fs::read_to_string(scenario_path)?;
    let scenario: Scenario = serde_json::from_str(&text)
        .map_err(|e| LraError::Parse(format!("{}: {e}", scenario_path.display())))?;
    let sim = simulate_grid(&scenario)?;
    let assignment = sim.assign()?;
    let dump = AssignmentDump {
        scenario: &scenario,
        complete: assignment.is_complete(),
        assignment: &assignment,
        text_region_cells: (0..sim.grid.cells())
            .filter(|&i| sim.grid.text_region()[i])
            .collect(),
        scores: sim.grid.scores(),
    };
    let mut w = create(out)?;
    serde_json::to_writer_pretty(&mut w, &dump)?;
    w.write_all(b"\n")?;
    w.flush()?;
    write_log(&with_suffix(out, ".log"), "assign-sim", started)?;

    let width = scenario.grid.w;
    for j in 0..assignment.t {
        let cells: Vec<String> = assignment
            .rows_for(j)
            .iter()
            .map(|&r| format!("({}, {})", r % width, r / width))
            .collect();
        println!("instance {j}: {}", cells.join(" "));
    }
    println!("total cost: {:.6}", assignment.total_cost);
    if !assignment.is_complete() {
        eprintln!(
            "warning: instances {:?} received fewer than K = {} positive cells",
            assignment.unmatched, assignment.k
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct BasisSummary<'a> {
    n_vertices: usize,
    m: usize,
    fit_method: &'a str,
    center: bool,
    normalize_scale: bool,
    orthonormality_error: f64,
    provenance: &'a lra_core::codec::Provenance,
}

pub fn inspect_basis(
    cfg: &RunConfig,
    basis_path: &Path,
    corpus: Option<&Path>,
    out: Option<&Path>,
) -> CmdResult {
    let started = Instant::now();
    let basis = load_basis(basis_path)?;
    let flags = basis.canonicalization();
    let summary = BasisSummary {
        n_vertices: basis.n_vertices(),
        m: basis.m(),
        fit_method: basis.fit_method().as_str(),
        center: flags.center,
        normalize_scale: flags.normalize_scale,
        orthonormality_error: orthonormality_error(basis.basis.matrix()),
        provenance: &basis.provenance,
    };
    println!("{}", serde_json::to_string_pretty(&summary)?);
    if let Some(out) = out {
        check_basis_vertices(&basis, cfg, basis_path)?;
        let c = load(&cfg.corpus(corpus))?;
        let report = importance_profile(&c, &basis, &cfg.settings())?;
        let mut inputs = basis_inputs(basis_path)?;
        inputs.extend(path_input("corpus", corpus));
        emit_report("inspect-basis", cfg, inputs, &report, out, started)?;
    }
    Ok(())
}
