use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use num_bigint::{BigInt, BigUint};
use num_traits::ToPrimitive;
use serde::Deserialize;
use serde_json::{json, Value};

use hnnrf::britton::{britton_reduce, is_trivial, reduce_and_normalize};
use hnnrf::certify::{decide, verify_certificate, BsReport, Check, VUCertificate, Verdict};
use hnnrf::complexes::{bs_cover, bs_presentation, is_covering, Lifter};
use hnnrf::gamma::{ComponentReport, FailureEvidence, Step};
use hnnrf::presentation::{load, parse_word, StandardPresentation};
use hnnrf::words::{Alphabet, Word};

/// Decide residual finiteness of graphs of free groups with cyclic edge groups.
///
/// Words use the file grammar: letters separated by spaces, `x^k` for powers,
/// parentheses for grouping. Quote them for the shell, e.g. "t a t^-1 a^-2".
#[derive(Debug, Parser)]
#[command(name = "hnnrf", version)]
struct Cli {
    /// Print certificate transcripts and component details.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decide residual finiteness and LERF (exit 0 RF, 1 not RF, 2 error).
    Decide {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Solve the word problem.
    Wp { file: PathBuf, word: String },
    /// Britton-reduce a word and normalize its extremal subwords.
    Normalize { file: PathBuf, word: String },
    /// Check a certificate (or the certificate inside `decide --json` output).
    Verify { file: PathBuf, cert: PathBuf },
    /// Build the finite cover of the BS(1,q) presentation complex.
    Cover(CoverArgs),
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("action").required(true).args(["check", "lift"])))]
struct CoverArgs {
    #[arg(long)]
    q: u64,
    #[arg(long)]
    n: u64,
    #[arg(long)]
    m: u64,
    /// Check that the cover is a covering map.
    #[arg(long)]
    check: bool,
    /// Lift a word over `a` and `t`.
    #[arg(long, value_name = "WORD")]
    lift: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Decide { file, json } => cmd_decide(file, *json, cli.verbose),
        Command::Wp { file, word } => cmd_wp(file, word),
        Command::Normalize { file, word } => cmd_normalize(file, word),
        Command::Verify { file, cert } => cmd_verify(file, cert),
        Command::Cover(args) => cmd_cover(args),
    }
}

fn load_file(path: &Path) -> Result<StandardPresentation> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    load(&text).with_context(|| format!("{}", path.display()))
}

fn input_word(sp: &StandardPresentation, text: &str) -> Result<Word> {
    let w = parse_word(text, sp.alphabet()).with_context(|| format!("word `{text}`"))?;
    Ok(sp.from_input_word(&w))
}

fn show(w: &Word, alphabet: &Alphabet) -> String {
    if w.is_empty() {
        "1".into()
    } else {
        w.display(alphabet).to_string()
    }
}

fn cmd_decide(file: &Path, as_json: bool, verbose: bool) -> Result<u8> {
    let sp = load_file(file)?;
    let verdict = decide(&sp).with_context(|| format!("{}", file.display()))?;
    if as_json {
        let out = verdict_json(&verdict, &sp);
        println!("{}", serde_json::to_string_pretty(&out)?);
    } else {
        print_verdict(&verdict, &sp, verbose);
    }
    Ok(if verdict.residually_finite { 0 } else { 1 })
}

fn print_verdict(v: &Verdict, sp: &StandardPresentation, verbose: bool) {
    let a = sp.alphabet();
    println!(
        "{}",
        if v.residually_finite {
            "residually finite"
        } else {
            "not residually finite"
        }
    );
    println!("lerf: {}", if v.lerf { "yes" } else { "no" });
    for (i, c) in v.components().iter().enumerate() {
        let kind = if c.clean {
            "clean".to_string()
        } else {
            format!(
                "not clean, structure {}",
                if c.structure_ok == Some(true) { "ok" } else { "fails" }
            )
        };
        println!(
            "component {i}: {} vertices, {} edges, betti {}, {kind}",
            c.vertices.len(),
            c.edges.len(),
            c.betti
        );
        if verbose {
            if let Some(p) = &c.potential {
                for (&vx, val) in c.vertices.iter().zip(p) {
                    println!("  potential({}) = {val}", sp.class(vx).word().display(a));
                }
            }
        }
    }
    if let Some(cert) = &v.certificate {
        println!("certificate:");
        println!("  g = {}", show(&sp.to_input_word(&cert.g), a));
        println!("  h = {}", show(&sp.to_input_word(&cert.h), a));
        println!("  m = {}", cert.m);
        println!("  n = {}", cert.n);
        if verbose {
            print_checks(&cert.transcript);
        }
    }
    match v.bs_report {
        Some(BsReport::Explicit { p, q }) => println!("contains BS({p},{q})"),
        Some(BsReport::PrimeExistence { ratio }) => {
            println!("contains BS(q,{ratio}q) for some prime q")
        }
        None => {}
    }
}

fn print_checks(checks: &[Check]) {
    for c in checks {
        println!("  [{}] {}", if c.holds { "ok" } else { "fail" }, c.claim);
    }
}

/// Integers as JSON numbers when they fit, strings otherwise.
fn big_int(x: &BigInt) -> Value {
    x.to_i64().map_or_else(|| Value::String(x.to_string()), Value::from)
}

fn big_uint(x: &BigUint) -> Value {
    x.to_u64().map_or_else(|| Value::String(x.to_string()), Value::from)
}

fn steps_json(steps: &[Step]) -> Value {
    steps
        .iter()
        .map(|s| json!({"edge": s.edge, "forward": s.forward}))
        .collect()
}

fn component_json(c: &ComponentReport, sp: &StandardPresentation) -> Value {
    let a = sp.alphabet();
    let vertices: Vec<Value> = c
        .vertices
        .iter()
        .map(|&v| json!({"index": v, "word": sp.class(v).word().display(a).to_string()}))
        .collect();
    let mut o = json!({
        "vertices": vertices,
        "edges": c.edges,
        "betti": c.betti,
        "clean": c.clean,
    });
    if let Some(p) = &c.potential {
        o["potential"] = c
            .vertices
            .iter()
            .zip(p)
            .map(|(&v, val)| json!({"vertex": v, "value": big_uint(val)}))
            .collect();
    }
    if let Some(cyc) = &c.unbalanced_cycle {
        o["unbalanced_cycle"] = steps_json(cyc);
    }
    if let Some(u) = &c.unique_cycle {
        o["unique_cycle"] = json!({
            "steps": steps_json(&u.steps),
            "loop_product_forward": big_int(&u.loop_product_forward),
            "loop_product_backward": big_int(&u.loop_product_backward),
        });
    }
    if let Some(ok) = c.structure_ok {
        o["structure_ok"] = json!(ok);
    }
    if let Some(f) = &c.failure_evidence {
        o["failure_evidence"] = match f {
            FailureEvidence::NoUnitLoopProduct { cycle } => {
                json!({"kind": "no_unit_loop_product", "cycle": steps_json(cycle)})
            }
            FailureEvidence::OffCycleLabel { edge, vertex, label } => {
                json!({"kind": "off_cycle_label", "edge": edge, "vertex": vertex, "label": label})
            }
            FailureEvidence::MultipleCycles { first, second } => json!({
                "kind": "multiple_cycles",
                "first": steps_json(first),
                "second": steps_json(second),
            }),
        };
    }
    o
}

fn certificate_json(cert: &VUCertificate, sp: &StandardPresentation) -> Value {
    let a = sp.alphabet();
    let checks: Vec<Value> = cert
        .transcript
        .iter()
        .map(|c| json!({"claim": c.claim, "holds": c.holds}))
        .collect();
    json!({
        "g": sp.to_input_word(&cert.g).display(a).to_string(),
        "h": sp.to_input_word(&cert.h).display(a).to_string(),
        "m": cert.m,
        "n": cert.n,
        "checks": checks,
    })
}

fn verdict_json(v: &Verdict, sp: &StandardPresentation) -> Value {
    let mut o = json!({
        "schema": 1,
        "verdict": if v.residually_finite { "residually_finite" } else { "not_residually_finite" },
        "lerf": v.lerf,
        "components": v.components().iter().map(|c| component_json(c, sp)).collect::<Vec<_>>(),
    });
    if let Some(cert) = &v.certificate {
        o["certificate"] = certificate_json(cert, sp);
    }
    match v.bs_report {
        Some(BsReport::Explicit { p, q }) => {
            o["bs_report"] = json!({"kind": "explicit", "p": p, "q": q});
        }
        Some(BsReport::PrimeExistence { ratio }) => {
            o["bs_report"] = json!({"kind": "prime_existence", "ratio": ratio});
        }
        None => {}
    }
    o
}

fn cmd_wp(file: &Path, word: &str) -> Result<u8> {
    let sp = load_file(file)?;
    let w = input_word(&sp, word)?;
    let trivial = is_trivial(&w, &sp);
    println!("{}", if trivial { "trivial" } else { "nontrivial" });
    println!("reduced: {}", show(&britton_reduce(&w, &sp), sp.alphabet()));
    Ok(0)
}

fn cmd_normalize(file: &Path, word: &str) -> Result<u8> {
    let sp = load_file(file)?;
    let w = input_word(&sp, word)?;
    let out = reduce_and_normalize(&w, &sp).with_context(|| format!("normalizing `{word}`"))?;
    println!("{}", show(&out, sp.alphabet()));
    Ok(0)
}

#[derive(Debug, Deserialize)]
struct CertFile {
    g: String,
    h: String,
    m: i64,
    n: i64,
}

fn cmd_verify(file: &Path, cert: &Path) -> Result<u8> {
    let sp = load_file(file)?;
    let text = fs::read_to_string(cert).with_context(|| format!("reading {}", cert.display()))?;
    let mut v: Value =
        serde_json::from_str(&text).with_context(|| format!("{}: bad JSON", cert.display()))?;
    if v.get("schema").is_some() {
        v = match v.get_mut("certificate") {
            Some(c) => c.take(),
            None => bail!("{}: verdict carries no certificate", cert.display()),
        };
    }
    let c: CertFile =
        serde_json::from_value(v).with_context(|| format!("{}: bad certificate", cert.display()))?;
    let certificate = VUCertificate {
        g: input_word(&sp, &c.g)?,
        h: input_word(&sp, &c.h)?,
        m: c.m,
        n: c.n,
        transcript: Vec::new(),
    };
    let (ok, checks) = verify_certificate(&certificate, &sp);
    println!("{}", if ok { "valid" } else { "invalid" });
    print_checks(&checks);
    Ok(if ok { 0 } else { 1 })
}

fn cmd_cover(args: &CoverArgs) -> Result<u8> {
    let (x, f) = bs_cover(args.q, args.n, args.m)?;
    let degree = x.zero_cells();
    if args.check {
        if is_covering(&f) {
            println!("covering: yes (degree {degree})");
        } else {
            println!("covering: no");
        }
        return Ok(0);
    }
    let text = args.lift.as_deref().ok_or_else(|| anyhow!("nothing to do"))?;
    let w = parse_word(text, bs_presentation(args.q).alphabet())
        .with_context(|| format!("word `{text}`"))?;
    let lifter = Lifter::new(&f);
    let mut closed = 0;
    for b in 0..degree {
        let end = lifter.end(&w, b)?;
        if b == 0 {
            println!(
                "lift from 0 ends at {end} ({})",
                if end == 0 { "closed" } else { "open" }
            );
        }
        closed += usize::from(end == b);
    }
    println!("closed at {closed} of {degree} bases");
    Ok(0)
}
