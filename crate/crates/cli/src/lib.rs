//! Command implementations behind the `quasipure` binary. Every command
//! renders into a `String` so the output can be tested byte for byte.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use quasipure_core::numeric::{
    density_from_ensemble, full_verification, partial_transpose_min_eig, tolerance, Caps, VerificationReport,
    DEFAULT_DENSE_CAP,
};
use quasipure_core::{
    canonical_mixture, decompose, entanglement, DecompositionTree, Error, FlagKind, MesLabel, OperationStep, Scope,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_VERIFICATION_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_RESOURCE_LIMIT: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "quasipure",
    version,
    about = "Entanglement of uniform mixtures of copied maximally entangled qudit pairs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the BXOR-round table for local dimension d, rows k = 1..k_max.
    Table { d: u64, k_max: u64 },
    /// Print the decomposition certificate for (d, k).
    Decompose {
        d: u64,
        k: u64,
        #[arg(long)]
        json: bool,
    },
    /// Print the entanglement of the k-copy mixture, symbolically and in bits.
    Entanglement { d: u64, k: u64 },
    /// Replay the certificate numerically and run the equivalence suites.
    Verify {
        d: u64,
        k: u64,
        #[arg(long)]
        json: bool,
        #[arg(long, default_value_t = 1_000_000)]
        sparse_cap: u64,
        #[arg(long, default_value_t = DEFAULT_DENSE_CAP)]
        dense_cap: usize,
    },
    /// Write `d,k,bits` CSV rows for d = 1..d_max, k = 1..k_max.
    Figure {
        #[arg(long)]
        d_max: u64,
        #[arg(long)]
        k_max: u64,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Smallest eigenvalue of the partial transpose of the k-copy mixture.
    Ppt {
        d: u64,
        k: u64,
        #[arg(long, default_value_t = DEFAULT_DENSE_CAP)]
        dense_cap: usize,
    },
}

/// A command that ran to completion: what to print and the exit status.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub stdout: String,
    pub status: u8,
}

impl Output {
    fn ok(stdout: String) -> Self {
        Self {
            stdout,
            status: EXIT_OK,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub status: u8,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::ResourceLimit { .. } => EXIT_RESOURCE_LIMIT,
            Error::InvalidArgument(_) => EXIT_USAGE,
            _ => EXIT_VERIFICATION_FAILED,
        };
        let message = match e {
            Error::ResourceLimit { what, needed, cap } => {
                format!("refused: {what} would need {needed}, cap is {cap}")
            }
            other => other.to_string(),
        };
        Self { status, message }
    }
}

fn usage(message: impl Into<String>) -> CliError {
    CliError {
        status: EXIT_USAGE,
        message: message.into(),
    }
}

pub fn run(cli: &Cli) -> Result<Output, CliError> {
    match &cli.command {
        Command::Table { d, k_max } => Ok(Output::ok(table(*d, *k_max)?)),
        Command::Decompose { d, k, json } => {
            let tree = decompose(*d, *k)?;
            Ok(Output::ok(if *json { tree_json(&tree) } else { tree_text(&tree) }))
        }
        Command::Entanglement { d, k } => Ok(Output::ok(entanglement_text(*d, *k)?)),
        Command::Verify {
            d,
            k,
            json,
            sparse_cap,
            dense_cap,
        } => {
            let caps = Caps {
                sparse: *sparse_cap,
                dense: *dense_cap,
            };
            let report = full_verification(*d, *k, &caps)?;
            let status = if report.passed() {
                EXIT_OK
            } else {
                EXIT_VERIFICATION_FAILED
            };
            let stdout = if *json {
                serde_json::to_string_pretty(&report).expect("report serializes") + "\n"
            } else {
                report_text(&report)
            };
            Ok(Output { stdout, status })
        }
        Command::Figure { d_max, k_max, out } => {
            let csv = figure_csv(*d_max, *k_max)?;
            match out {
                Some(path) => {
                    std::fs::write(path, &csv).map_err(|e| CliError {
                        status: EXIT_VERIFICATION_FAILED,
                        message: format!("cannot write {}: {e}", path.display()),
                    })?;
                    Ok(Output::ok(String::new()))
                }
                None => Ok(Output::ok(csv)),
            }
        }
        Command::Ppt { d, k, dense_cap } => {
            let result = ppt(*d, *k, *dense_cap)?;
            Ok(Output::ok(result.to_string()))
        }
    }
}

/// `x` to `digits` significant digits with trailing zeros removed.
pub fn significant(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let magnitude = x.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - magnitude).max(0) as usize;
    let text = format!("{x:.decimals$}");
    if text.contains('.') {
        text.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        text
    }
}

fn symbolic_label(d: u64, m: u64) -> String {
    if d > 10 {
        format!("φ_{{{m},n}}")
    } else {
        format!("φ_{{{m}n}}")
    }
}

/// Cells whose printed form in the published tables disagrees with the BXOR round.
fn footnote(d: u64, k: u64, m: u64) -> Option<&'static str> {
    match (d, k, m) {
        (4, 5, 2) => {
            Some("the accompanying decomposition lists this branch as P_20^⊗3; the BXOR round leaves k−1 = 4 copies")
        }
        (6, 6, 2) => Some("printed elsewhere as φ_20^⊗4; the BXOR round leaves k−1 = 5 copies"),
        (6, 2, _) => Some("printed elsewhere with ^⊗2 on the first factor; k = 2 leaves a single copy"),
        _ => None,
    }
}

/// The words `𝓑(φ_mn^{⊗k})` with symbolic `n`, one per `m`.
pub fn table_words(d: u64, k: u64) -> Result<Vec<String>, CliError> {
    (0..d)
        .map(|m| {
            if k == 1 {
                return Ok(symbolic_label(d, m));
            }
            let head = MesLabel::new(d, m, 0)?;
            let last = symbolic_label(d, (k * m) % d);
            Ok(if k == 2 {
                format!("{head}⊗{last}")
            } else {
                format!("{head}^⊗{}⊗{last}", k - 1)
            })
        })
        .collect()
}

pub fn table(d: u64, k_max: u64) -> Result<String, CliError> {
    if d < 2 {
        return Err(usage("table needs d ≥ 2"));
    }
    if k_max < 1 {
        return Err(usage("table needs k_max ≥ 1"));
    }
    let mut header = vec!["k".to_string()];
    header.extend((0..d).map(|m| format!("{}^⊗k", symbolic_label(d, m))));
    header.push(format!("E(ρ_{d}^(k))"));
    header.push("bits".into());

    let mut rows = vec![header];
    let mut notes: Vec<String> = Vec::new();
    for k in 1..=k_max {
        let mut row = vec![k.to_string()];
        let mut marked = None;
        for (m, word) in table_words(d, k)?.into_iter().enumerate() {
            match footnote(d, k, m as u64) {
                Some(note) => {
                    let index = match marked {
                        Some(i) => i,
                        None => {
                            notes.push(note.to_string());
                            notes.len()
                        }
                    };
                    marked = Some(index);
                    row.push(format!("{word} [{index}]"));
                }
                None => row.push(word),
            }
        }
        let e = entanglement(d, k)?;
        row.push(e.render_in_base(d));
        row.push(significant(e.bits(), 6));
        rows.push(row);
    }

    let columns = rows[0].len();
    let widths: Vec<usize> = (0..columns)
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, &w)| format!("{cell}{}", " ".repeat(w - cell.chars().count())))
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
        if i == 0 {
            let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
            out.push_str(&rule.join("  "));
            out.push('\n');
        }
    }
    for (i, note) in notes.iter().enumerate() {
        let _ = writeln!(out, "[{}] {note}", i + 1);
    }
    Ok(out)
}

pub fn entanglement_text(d: u64, k: u64) -> Result<String, CliError> {
    let e = entanglement(d, k)?;
    Ok(format!(
        "E(ρ_{d}^({k})) = {}\n{} bits\n",
        e.render_in_base(d),
        significant(e.bits(), 6)
    ))
}

pub fn tree_json(tree: &DecompositionTree) -> String {
    serde_json::to_string_pretty(tree).expect("tree serializes") + "\n"
}

fn scope_suffix(scope: Scope) -> String {
    match scope {
        Scope::All => String::new(),
        Scope::Group(t) => format!("  [group t = {t}]"),
    }
}

fn slot_list<T: std::fmt::Display>(items: &[T]) -> String {
    items.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(", ")
}

pub fn tree_text(tree: &DecompositionTree) -> String {
    let s = &tree.split;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "ρ_{}^({}): g = {}, d̃ = {}, k̃ = {}",
        s.d, s.k, s.g, s.d_tilde, s.k_tilde
    );
    let _ = writeln!(out, "steps:");
    if tree.steps.is_empty() {
        let _ = writeln!(out, "  (none)");
    }
    for (i, step) in tree.steps.iter().enumerate() {
        let text = match step {
            OperationStep::BxorRound { sources, target, .. } => {
                format!("BXOR {} → {target}", slot_list(sources))
            }
            OperationStep::DualBasis { slots, .. } => format!("dual basis on {}", slot_list(slots)),
            OperationStep::LocalShiftM { slot, amount, .. } => format!("Bob shifts {slot} by {amount}"),
            OperationStep::DimensionSplit { slot, d_tilde, .. } => {
                format!("split {slot} as ({}) ⊗ ({d_tilde})", s.d / d_tilde)
            }
            OperationStep::FlagMeasurement { slot, flag_kind, .. } => {
                let basis = match flag_kind {
                    FlagKind::SumOverN => "computational",
                    FlagKind::SumOverM => "dual",
                };
                format!("read out {slot} in the {basis} basis")
            }
        };
        let _ = writeln!(out, "  {:>2}. {text}{}", i + 1, scope_suffix(step.scope()));
    }
    let _ = writeln!(out, "leaves:");
    for leaf in &tree.leaves {
        let tag = leaf
            .tag
            .map(|t| format!("{} on {}", t.flag, t.slot))
            .unwrap_or_else(|| "none".into());
        let _ = writeln!(out, "  t = {}: p = {}, tag {tag}", leaf.t, leaf.probability);
        for p in &leaf.pure_part {
            let label = p.label().map(|l| l.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "      pure {label}({})^⊗{} on {}",
                p.dim,
                p.copies,
                slot_list(&p.slots)
            );
        }
        for f in &leaf.separable_part {
            let flags = f.flags.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" + ");
            let _ = writeln!(out, "      separable {flags} on {}", f.slot);
        }
    }
    let e = &tree.entanglement;
    let _ = writeln!(out, "E = {} = {} bits", e.render_in_base(s.d), significant(e.bits(), 6));
    out
}

pub fn report_text(report: &VerificationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "verify d = {}, k = {}", report.d, report.k);
    for c in &report.checks {
        let _ = writeln!(
            out,
            "  {}  {}: worst {:.3e} (tol {:.0e}); {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.worst_deviation,
            c.tolerance,
            c.detail
        );
    }
    let _ = writeln!(
        out,
        "{}",
        if report.passed() {
            "all checks passed"
        } else {
            "verification FAILED"
        }
    );
    out
}

/// `d,k,bits` rows. Bits are the shortest decimal that round-trips the f64.
pub fn figure_csv(d_max: u64, k_max: u64) -> Result<String, CliError> {
    if d_max < 1 || k_max < 1 {
        return Err(usage("figure needs --d-max ≥ 1 and --k-max ≥ 1"));
    }
    let mut out = String::from("d,k,bits\n");
    for d in 1..=d_max {
        for k in 1..=k_max {
            let _ = writeln!(out, "{d},{k},{}", entanglement(d, k)?.bits());
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PptResult {
    pub d: u64,
    pub k: u64,
    pub min_eigenvalue: f64,
}

impl PptResult {
    pub fn is_npt(&self) -> bool {
        self.min_eigenvalue < -tolerance::NPT_THRESHOLD
    }
}

impl std::fmt::Display for PptResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut value = format!("{:.9}", self.min_eigenvalue);
        if value.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
            value = value.trim_start_matches('-').to_string();
        }
        writeln!(
            f,
            "min eigenvalue of partial transpose of ρ_{}^({}): {value}",
            self.d, self.k
        )?;
        writeln!(
            f,
            "verdict: {} (threshold -{:e})",
            if self.is_npt() { "NPT" } else { "PPT" },
            tolerance::NPT_THRESHOLD
        )
    }
}

pub fn ppt(d: u64, k: u64, dense_cap: usize) -> Result<PptResult, CliError> {
    let rho = density_from_ensemble(&canonical_mixture(d, k)?, dense_cap)?;
    let min_eigenvalue = partial_transpose_min_eig(&rho, dense_cap)?;
    Ok(PptResult { d, k, min_eigenvalue })
}
