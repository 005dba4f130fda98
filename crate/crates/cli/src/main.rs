use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use scissors::acceptance::{run_all, SuiteConfig, CRITERIA, FAST};
use scissors::building::{build_f, FamilyJson, SubspaceFamily};
use scissors::classical::{
    ccs_simplex, dehn_classical, json_matrix, json_vector, simplex_json, tensor_reduce, volume, ClassicalError, Geometry,
    Polytope, Real, ReducePolicy,
};
use scissors::dehncube::{coinvariant_route, dehn_complex, dehn_report, ss_bottom_row};
use scissors::exactlin::{parse_q, Matrix};
use scissors::grouphom::{FiniteGroup, GroupJson};
use scissors::homology::{homology, homology_json, Coeff};
use scissors::simpset::SimpSetJson;

#[derive(Parser)]
#[command(name = "scissors", version, about = "Simplicial models of scissors congruence")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// coefficient ring for homology
    #[arg(long, global = true, default_value = "z")]
    coeff: Coeff,
    /// highest homology degree reported; orbit truncation for dehn-complex
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    truncate: Option<u64>,
    /// binary precision of real arithmetic
    #[arg(long, global = true, default_value_t = 200, value_parser = clap::value_parser!(u64).range(32..))]
    bits: u64,
    /// rounds allowed when closing a subspace family
    #[arg(long = "closure-rounds", global = true, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..))]
    closure_rounds: u64,
    /// write the JSON report here instead of standard output
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Reduced homology of a simplicial set file or of the building of a family file
    Homology { input: PathBuf },
    /// Dehn complex of a family under a finite group, with the spectral sequence cross-checks
    DehnComplex { family: PathBuf, group: PathBuf },
    /// Dehn invariant and volumes of a polytope file
    Classical { polytope: PathBuf },
    /// Simplex of a tuple of isometries applied to a base point
    Ccs { tuple: PathBuf },
    /// Run the acceptance suite
    Selftest {
        #[arg(value_enum, default_value_t = Level::Fast)]
        level: Level,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Level {
    Fast,
    Full,
}

enum Failure {
    Input(String),
    Criteria(Value),
}

fn input<E: std::fmt::Display>(ctx: &Path) -> impl Fn(E) -> Failure + '_ {
    move |e| Failure::Input(format!("{}: {e}", ctx.display()))
}

fn read_json(path: &Path) -> Result<Value, Failure> {
    let text = std::fs::read_to_string(path).map_err(input(path))?;
    serde_json::from_str(&text).map_err(input(path))
}

fn family(path: &Path, v: Value, rounds: usize) -> Result<SubspaceFamily, Failure> {
    let fj: FamilyJson = serde_json::from_value(v).map_err(input(path))?;
    fj.to_family(rounds).map_err(input(path))
}

fn group(path: &Path, fam: &SubspaceFamily) -> Result<FiniteGroup, Failure> {
    let v = read_json(path)?;
    if let Some(gens) = v.get("generators") {
        let gens: Vec<Vec<Vec<String>>> = serde_json::from_value(gens.clone()).map_err(input(path))?;
        let mats = gens
            .iter()
            .map(|m| m.iter().map(|r| r.iter().map(|s| parse_q(s)).collect::<Result<Vec<_>, _>>()).collect::<Result<Matrix, _>>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(input(path))?;
        let cap = v.get("max_order").and_then(Value::as_u64).unwrap_or(512) as usize;
        return FiniteGroup::generated_by(&mats, &fam.geometry, cap).map_err(input(path));
    }
    let gj: GroupJson = serde_json::from_value(v).map_err(input(path))?;
    gj.to_group(Some(&fam.geometry)).map_err(input(path))
}

fn cmd_homology(cli: &Cli, path: &Path) -> Result<Value, Failure> {
    let v = read_json(path)?;
    let (kind, chains) = if v.get("degrees").is_some() {
        let sj: SimpSetJson = serde_json::from_value(v).map_err(input(path))?;
        let x = sj.to_set().map_err(input(path))?;
        ("simplicial set", x.normalized_chains())
    } else {
        let fam = family(path, v, cli.closure_rounds as usize)?;
        let f = build_f(&fam).map_err(input(path))?;
        ("building", f.set().normalized_chains())
    };
    let mut h = homology(&chains, cli.coeff);
    if let Some(t) = cli.truncate {
        h.truncate(t as usize + 1);
    }
    Ok(json!({ "input": kind, "coeff": cli.coeff, "ranks": chains.ranks, "reduced_homology": homology_json(&h) }))
}

fn cmd_dehn_complex(cli: &Cli, fpath: &Path, gpath: &Path) -> Result<Value, Failure> {
    let fam = family(fpath, read_json(fpath)?, cli.closure_rounds as usize)?;
    let g = Arc::new(group(gpath, &fam)?);
    let bound = cli.truncate.map_or(fam.d() + 2, |t| t as usize);
    let (oc, dc) = dehn_complex(&fam, g, bound).map_err(input(fpath))?;
    let ss = ss_bottom_row(&oc, &dc).map_err(input(fpath))?;
    let co = coinvariant_route(&oc, &dc).map_err(input(fpath))?;
    let mut report = dehn_report(&dc, Some(&ss), co.as_ref());
    report["truncation"] = json!(bound);
    Ok(report)
}

fn cmd_classical(cli: &Cli, path: &Path) -> Result<Value, Failure> {
    let r = Real::new(cli.bits as usize);
    let p = Polytope::from_json(&r, &read_json(path)?).map_err(input(path))?;
    let dehn = match dehn_classical(&r, &p) {
        Ok(t) => tensor_reduce(&r, &t, ReducePolicy::default()).map(|red| red.to_json(&r)).map_err(input(path))?,
        Err(ClassicalError::Dimension(d)) => json!({ "skipped": format!("Dehn invariant needs dimension 3, got {d}") }),
        Err(e) => return Err(input(path)(e)),
    };
    let mut total = 0.0;
    let mut err = 0.0;
    let mut pieces = Vec::new();
    for k in 0..p.simplices.len() {
        let sign = p.simplices[k].1 as f64;
        match volume(&r, &p.simplex(k), 1e-9) {
            Ok(v) => {
                total += sign * v.value;
                err += v.error;
                pieces.push(json!({ "simplex": k, "sign": sign, "volume": v }));
            }
            Err(e) => pieces.push(json!({ "simplex": k, "sign": sign, "error": e.to_string() })),
        }
    }
    let complete = pieces.iter().all(|p| p.get("error").is_none());
    Ok(json!({
        "flavor": p.geometry,
        "bits": cli.bits,
        "dehn_invariant": dehn,
        "volume": if complete { json!({ "value": total, "error": err }) } else { Value::Null },
        "simplices": pieces,
    }))
}

fn cmd_ccs(cli: &Cli, path: &Path) -> Result<Value, Failure> {
    let r = Real::new(cli.bits as usize);
    let v = read_json(path)?;
    let flavor = v["flavor"].as_str().ok_or_else(|| Failure::Input(format!("{}: missing flavor", path.display())))?;
    let geometry = Geometry::parse(flavor).map_err(input(path))?;
    let x0 = json_vector(&r, &v["x0"]).map_err(input(path))?;
    let tuple = v["tuple"]
        .as_array()
        .ok_or_else(|| Failure::Input(format!("{}: missing tuple", path.display())))?
        .iter()
        .map(|m| json_matrix(&r, m))
        .collect::<Result<Vec<_>, _>>()
        .map_err(input(path))?;
    let (s, sign) = ccs_simplex(&r, geometry, &tuple, &x0).map_err(input(path))?;
    let n = s.dim();
    let lengths: Vec<Vec<f64>> =
        (0..=n).map(|a| (0..=n).map(|b| if a == b { 0.0 } else { r.to_f64(&s.edge_length(&r, a, b)) }).collect()).collect();
    let vol = volume(&r, &s, 1e-9).map(|v| json!(v)).unwrap_or_else(|e| json!({ "error": e.to_string() }));
    Ok(json!({ "simplex": simplex_json(&r, &s), "sign": sign, "edge_lengths": lengths, "volume": vol }))
}

fn cmd_selftest(cli: &Cli, level: Level) -> Result<Value, Failure> {
    let ids: Vec<usize> = match level {
        Level::Fast => FAST.to_vec(),
        Level::Full => CRITERIA.iter().map(|c| c.id).collect(),
    };
    let cfg = SuiteConfig { bits: cli.bits as usize, ..SuiteConfig::default() };
    let mut results = Vec::new();
    for id in ids {
        let r = run_all(&[id], &cfg).remove(0);
        eprintln!("{}", r.line());
        results.push(r);
    }
    let passed = results.iter().all(|r| r.passed);
    let report = json!({ "level": match level { Level::Fast => "fast", Level::Full => "full" }, "passed": passed, "criteria": results });
    if passed {
        Ok(report)
    } else {
        Err(Failure::Criteria(report))
    }
}

fn emit(cli: &Cli, v: &Value) -> Result<(), String> {
    let text = serde_json::to_string_pretty(v).map_err(|e| e.to_string())?;
    match &cli.out {
        Some(p) => std::fs::write(p, text + "\n").map_err(|e| format!("{}: {e}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Homology { input } => cmd_homology(&cli, input),
        Command::DehnComplex { family, group } => cmd_dehn_complex(&cli, family, group),
        Command::Classical { polytope } => cmd_classical(&cli, polytope),
        Command::Ccs { tuple } => cmd_ccs(&cli, tuple),
        Command::Selftest { level } => cmd_selftest(&cli, *level),
    };
    match result {
        Ok(v) => match emit(&cli, &v) {
            Ok(()) => {
                eprintln!("ok");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
        Err(Failure::Criteria(v)) => {
            let _ = emit(&cli, &v);
            eprintln!("some criteria failed");
            ExitCode::from(1)
        }
        Err(Failure::Input(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
