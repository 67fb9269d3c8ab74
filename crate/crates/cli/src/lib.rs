//! `imcheck verify`: satisfaction bounds of a Rabin automaton on an interval chain.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use imcheck_core::bscc::SetsDump;
use imcheck_core::engine::Verification;
use imcheck_core::product::ProductDump;
use imcheck_core::{load_dra, load_imc, verify_detailed, BoundMeta, BoundResult, Route, StateBounds, VerifyOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_CONTRACT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "imcheck", version, about = "Satisfaction bounds for Rabin properties on interval Markov chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute lower and upper satisfaction bounds for every model state.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Interval chain, in the text format or as `.json`.
    #[arg(long)]
    model: PathBuf,
    /// Deterministic Rabin automaton for the property, HOA or `.json`.
    #[arg(long)]
    automaton: PathBuf,
    /// Automaton for the negated property; required when the property has
    /// more than one Rabin pair.
    #[arg(long)]
    complement_automaton: Option<PathBuf>,
    /// Value iteration stops once a sweep changes no value by this much.
    #[arg(long, default_value_t = 1e-6, value_parser = positive_f64)]
    epsilon: f64,
    /// Value iteration sweep limit.
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    max_iters: u64,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Include the largest non-accepting and accepting sets.
    #[arg(long)]
    dump_sets: bool,
    /// Include the product chains.
    #[arg(long)]
    dump_product: bool,
}

fn positive_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be a positive number, got {s}"))
    }
}

#[derive(Debug, Serialize)]
struct SetsOutput {
    property: SetsDump,
    #[serde(skip_serializing_if = "Option::is_none")]
    complement: Option<SetsDump>,
}

#[derive(Debug, Serialize)]
struct ProductOutput {
    property: ProductDump,
    #[serde(skip_serializing_if = "Option::is_none")]
    complement: Option<ProductDump>,
}

#[derive(Debug, Serialize)]
struct JsonOutput<'a> {
    property_file: String,
    model_file: String,
    automaton_files: Vec<String>,
    per_state: &'a [StateBounds],
    meta: &'a BoundMeta,
    #[serde(skip_serializing_if = "Option::is_none")]
    sets: Option<SetsOutput>,
    #[serde(skip_serializing_if = "Option::is_none")]
    product: Option<ProductOutput>,
}

#[derive(Debug, Serialize)]
struct DumpOutput {
    #[serde(skip_serializing_if = "Option::is_none")]
    sets: Option<SetsOutput>,
    #[serde(skip_serializing_if = "Option::is_none")]
    product: Option<ProductOutput>,
}

fn path_string(p: &Path) -> String {
    p.display().to_string()
}

fn sets_output(v: &Verification) -> SetsOutput {
    match v.route {
        Route::SinglePair => {
            let mut property = v.lower.sets.dump(&v.lower.product);
            property.accepting = v.upper.sets.dump(&v.upper.product).accepting;
            let mut upper = v.upper.sets.dump(&v.upper.product).witnesses;
            property.witnesses.append(&mut upper);
            SetsOutput {
                property,
                complement: None,
            }
        }
        Route::Complement => SetsOutput {
            property: v.lower.sets.dump(&v.lower.product),
            complement: Some(v.upper.sets.dump(&v.upper.product)),
        },
    }
}

fn product_output(v: &Verification) -> ProductOutput {
    ProductOutput {
        property: v.lower.product.dump(),
        complement: (v.route == Route::Complement).then(|| v.upper.product.dump()),
    }
}

/// Bounds in the layout of a table with one column per state.
pub fn render_table(result: &BoundResult) -> String {
    let head = ["Lower bound", "Upper bound"];
    let label_width = head.iter().map(|h| h.len()).max().unwrap_or(0);
    let widths: Vec<usize> = result.per_state.iter().map(|b| b.state.len().max(5)).collect();
    let mut out = String::new();
    let _ = write!(out, "{:label_width$}", "");
    for (b, w) in result.per_state.iter().zip(&widths) {
        let _ = write!(out, "  {:>w$}", b.state);
    }
    out.push('\n');
    for (name, pick) in [(head[0], true), (head[1], false)] {
        let _ = write!(out, "{name:label_width$}");
        for (b, w) in result.per_state.iter().zip(&widths) {
            let v = if pick { b.lower } else { b.upper };
            let _ = write!(out, "  {v:>w$.3}");
        }
        out.push('\n');
    }
    out
}

/// Parses `args` (including the program name), runs the command, and returns
/// the process exit code.
pub fn run<I, T>(args: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match cli.command {
        Command::Verify(args) => match verify_command(&args, out, err) {
            Ok(()) => EXIT_OK,
            Err((code, message)) => {
                let _ = writeln!(err, "error: {message}");
                code
            }
        },
    }
}

fn verify_command(args: &VerifyArgs, out: &mut impl Write, err: &mut impl Write) -> Result<(), (i32, String)> {
    let input = |path: &Path, e: &dyn std::fmt::Display| (EXIT_INPUT, format!("{}: {e}", path.display()));
    let model = load_imc(&args.model).map_err(|e| input(&args.model, &e))?;
    let automaton = load_dra(&args.automaton, model.props()).map_err(|e| input(&args.automaton, &e))?;
    let complement = match &args.complement_automaton {
        Some(path) => Some(load_dra(path, model.props()).map_err(|e| input(path, &e))?),
        None => None,
    };
    let opts = VerifyOptions {
        epsilon: args.epsilon,
        max_iters: usize::try_from(args.max_iters).unwrap_or(usize::MAX),
    };
    let v = verify_detailed(&model, &automaton, complement.as_ref(), &opts).map_err(|e| {
        let code = if e.is_contract() { EXIT_CONTRACT } else { EXIT_INPUT };
        (code, e.to_string())
    })?;

    for (stage, meta) in [("lower", &v.result.meta.lower), ("upper", &v.result.meta.upper)] {
        if !meta.converged {
            let _ = writeln!(
                err,
                "warning: {stage} bound value iteration stopped after {} sweeps with residual {:e}",
                meta.iterations, meta.residual
            );
        }
    }

    let sets = args.dump_sets.then(|| sets_output(&v));
    let product = args.dump_product.then(|| product_output(&v));
    let write_err = |e: std::io::Error| (EXIT_INPUT, format!("cannot write output: {e}"));
    match args.format {
        Format::Json => {
            let mut automaton_files = vec![path_string(&args.automaton)];
            automaton_files.extend(args.complement_automaton.as_deref().map(path_string));
            let doc = JsonOutput {
                property_file: path_string(&args.automaton),
                model_file: path_string(&args.model),
                automaton_files,
                per_state: &v.result.per_state,
                meta: &v.result.meta,
                sets,
                product,
            };
            let text = serde_json::to_string_pretty(&doc).expect("output is serialisable");
            writeln!(out, "{text}").map_err(write_err)?;
        }
        Format::Table => {
            out.write_all(render_table(&v.result).as_bytes()).map_err(write_err)?;
            if sets.is_some() || product.is_some() {
                let text = serde_json::to_string_pretty(&DumpOutput { sets, product }).expect("output is serialisable");
                writeln!(out, "{text}").map_err(write_err)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use imcheck_core::{parse_dra, parse_imc};

    #[test]
    fn table_columns_follow_state_names() {
        let m = parse_imc(include_str!("../../../fixtures/optional_cycle.imc")).unwrap();
        let a = parse_dra(include_str!("../../../fixtures/phi1.hoa"), m.props()).unwrap();
        let r = imcheck_core::verify(&m, &a, None, &VerifyOptions::default()).unwrap();
        let text = render_table(&r);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("Lower bound"));
        assert!(lines[2].ends_with("1.000  1.000  1.000  0.000"));
        assert!(lines.iter().all(|l| l.len() == lines[0].len()));
    }
}
