//! Command-line frontend: factoring, streaming gate counts, construction
//! benchmarks, count-ratio sweeps and the IR text dump.
//!
//! Exit codes: 0 on success, 1 on factoring failure or capacity limits,
//! 2 on usage errors.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use qfactor_core::bench::{bench_construction, bench_ratio, count_gates, is_prime, RatioSummary};
use qfactor_core::circuits::build_qpe_program;
use qfactor_core::driver::{shors_algorithm_with, ProgramCache};
use qfactor_core::error::Error;
use qfactor_core::number_theory::{bit_width, gcd};
use qfactor_core::params::OptimizationFlags;

#[derive(Parser)]
#[command(
    name = "qfactor",
    about = "Compile-once factoring workflow: simulator, gate counter and benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Factor an odd semiprime with the simulated order-finding loop.
    Factor {
        /// The number to factor (odd, composite, >= 15).
        n: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Estimation iterations; defaults to twice the bit width.
        #[arg(long)]
        t: Option<u32>,
        /// all, none, or a comma list of
        /// precomputed-powers,first-addition,or-mask,overflow.
        #[arg(long, default_value = "all", value_parser = parse_flags)]
        opt: OptimizationFlags,
        #[arg(long, default_value_t = 32)]
        max_attempts: u32,
        /// Emit the result as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Count gates for one (N, a) instance by streaming, without simulation.
    Count {
        n: u64,
        a: u64,
        /// Estimation iterations; defaults to twice the bit width.
        #[arg(long)]
        t: Option<u32>,
        #[arg(long, default_value = "all", value_parser = parse_flags)]
        opt: OptimizationFlags,
        /// Expand 3-qubit gates into 1- and 2-qubit gates before counting.
        #[arg(long)]
        lowered: bool,
        /// Count phase gates whose angle evaluates to zero (default true).
        #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
        count_zero_angle: bool,
    },
    /// Benchmarks.
    Bench {
        #[command(subcommand)]
        which: BenchCommand,
    },
    /// Print the program tree for one bit width.
    DumpIr {
        #[arg(long)]
        bits: u32,
        #[arg(long)]
        t: Option<u32>,
    },
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Time cold program construction per bit width.
    Compile {
        #[command(flatten)]
        bits: BitsArg,
        #[arg(long, default_value_t = 3)]
        reps: u32,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Print the records as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Optimized vs unoptimized gate totals over random bases.
    Ratio {
        #[command(flatten)]
        bits: BitsArg,
        /// Random bases per bit width.
        #[arg(long, default_value_t = 10)]
        samples: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Print the records as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct BitsArg {
    /// Bit widths: comma list and inclusive ranges, e.g. 8,16,32 or 4..16.
    #[arg(long, value_parser = parse_bits)]
    bits: BitList,
}

#[derive(Clone, Debug)]
struct BitList(Vec<u32>);

fn parse_bits(s: &str) -> Result<BitList, String> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        if let Some((lo, hi)) = part.split_once("..") {
            let lo: u32 = lo.trim().parse().map_err(|e| format!("bad bit width: {e}"))?;
            let hi: u32 = hi.trim().parse().map_err(|e| format!("bad bit width: {e}"))?;
            if lo > hi {
                return Err(format!("empty range {part}"));
            }
            out.extend(lo..=hi);
        } else {
            out.push(part.parse().map_err(|e| format!("bad bit width: {e}"))?);
        }
    }
    if out.is_empty() {
        return Err("no bit widths given".into());
    }
    if out.iter().any(|&b| !(2..=60).contains(&b)) {
        return Err("bit widths must be in 2..=60".into());
    }
    Ok(BitList(out))
}

fn parse_flags(s: &str) -> Result<OptimizationFlags, String> {
    match s {
        "all" => return Ok(OptimizationFlags::all()),
        "none" => return Ok(OptimizationFlags::none()),
        _ => {}
    }
    let mut flags = OptimizationFlags::none();
    for name in s.split([',', '+']) {
        match name.trim() {
            "precomputed-powers" => flags.use_precomputed_powers = true,
            "first-addition" => flags.first_iteration_as_addition = true,
            "or-mask" => flags.elide_adders_by_or_mask = true,
            "overflow" => flags.elide_overflow_checks = true,
            other => {
                return Err(format!(
                    "unknown optimization '{other}' (expected all, none, \
                     precomputed-powers, first-addition, or-mask, overflow)"
                ))
            }
        }
    }
    Ok(flags)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    ExitCode::from(run(cli))
}

fn usage_error(msg: &str) -> u8 {
    eprintln!("error: {msg}");
    2
}

fn run(cli: Cli) -> u8 {
    match cli.command {
        Command::Factor { n, seed, t, opt, max_attempts, json } => {
            factor(n, seed, t, opt, max_attempts, json)
        }
        Command::Count { n, a, t, opt, lowered, count_zero_angle } => {
            count(n, a, t, opt, lowered, count_zero_angle)
        }
        Command::Bench { which } => match which {
            BenchCommand::Compile { bits, reps, csv, json } => {
                bench_compile(&bits.bits.0, reps, csv, json)
            }
            BenchCommand::Ratio { bits, samples, seed, csv, json } => {
                bench_ratio_cmd(&bits.bits.0, samples, seed, csv, json)
            }
        },
        Command::DumpIr { bits, t } => {
            let t = t.unwrap_or(2 * bits);
            let program = build_qpe_program(bits, t, OptimizationFlags::all());
            print!("{}", program.dump());
            0
        }
    }
}

fn factor(n: u64, seed: u64, t: Option<u32>, opt: OptimizationFlags, max_attempts: u32, json: bool) -> u8 {
    if n < 15 {
        return usage_error(&format!("N = {n} is below the supported minimum of 15"));
    }
    if n.is_multiple_of(2) {
        return usage_error(&format!("N = {n} is even; divide by two first"));
    }
    if is_prime(n) {
        return usage_error(&format!("N = {n} is prime; nothing to factor"));
    }
    let cache = ProgramCache::new();
    let start = Instant::now();
    match shors_algorithm_with(n, seed, opt, max_attempts, t, &cache) {
        Ok(result) => {
            if json {
                println!(
                    "{}",
                    serde_json::json!({
                        "n": result.n,
                        "p": result.p,
                        "q": result.q,
                        "seed": result.seed,
                        "attempt_count": result.attempts.len(),
                        "attempts": result.attempts,
                        "elapsed_s": start.elapsed().as_secs_f64(),
                    })
                );
            } else {
                println!(
                    "N = {}: p={} q={} (attempts: {}, {:.2}s)",
                    result.n,
                    result.p,
                    result.q,
                    result.attempts.len(),
                    start.elapsed().as_secs_f64()
                );
            }
            0
        }
        Err(Error::AttemptsExhausted { attempts }) => {
            eprintln!(
                "factoring failed after {} attempts; try another --seed or raise --max-attempts",
                attempts.len()
            );
            1
        }
        Err(Error::Capacity(msg)) => {
            eprintln!("capacity: {msg}");
            eprintln!("hint: `qfactor count {n} <a>` counts gates at any width without simulating");
            1
        }
        Err(Error::InvalidArgument(msg)) => usage_error(&msg),
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn count(n: u64, a: u64, t: Option<u32>, opt: OptimizationFlags, lowered: bool, count_zero_angle: bool) -> u8 {
    if n < 2 || a < 1 {
        return usage_error("need N >= 2 and a >= 1");
    }
    if gcd(a, n) != 1 {
        return usage_error(&format!(
            "gcd({a}, {n}) = {} != 1; such bases factor N classically",
            gcd(a, n)
        ));
    }
    let t = t.unwrap_or(2 * bit_width(n));
    match count_gates(n, a, t, opt, lowered, count_zero_angle) {
        Ok(c) => {
            println!(
                "n={} N={n} a={a} t={t} flags={opt} lowered={lowered} count_zero_angle={count_zero_angle}",
                bit_width(n)
            );
            println!(
                "g1={} g2={} g3={} total={} measurements={} resets={}",
                c.one_qubit,
                c.two_qubit,
                c.three_qubit,
                c.total(),
                c.measurements,
                c.resets
            );
            0
        }
        Err(Error::InvalidArgument(msg)) => usage_error(&msg),
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

const CSV_HEADER: [&str; 11] = [
    "n", "N", "a", "flags", "construction_time_s", "node_count", "g1", "g2", "g3", "total",
    "reduction_ratio",
];

type CsvRow = [String; 11];

fn write_csv(path: Option<&PathBuf>, rows: &[CsvRow]) -> std::io::Result<()> {
    let sink: Box<dyn Write> = match path {
        Some(p) => Box::new(std::fs::File::create(p)?),
        None => Box::new(std::io::stdout()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.write_record(row.iter())?;
    }
    w.flush()
}

/// JSON mirror of the CSV rows: one object per row, same field names,
/// empty cells omitted.
fn print_json_rows(rows: &[CsvRow]) {
    let objects: Vec<serde_json::Value> = rows
        .iter()
        .map(|row| {
            let mut obj = serde_json::Map::new();
            for (name, value) in CSV_HEADER.iter().zip(row.iter()) {
                if value.is_empty() {
                    continue;
                }
                let parsed = value
                    .parse::<u64>()
                    .map(Into::into)
                    .or_else(|_| value.parse::<f64>().map(Into::into))
                    .unwrap_or_else(|_| serde_json::Value::String(value.clone()));
                obj.insert((*name).to_string(), parsed);
            }
            serde_json::Value::Object(obj)
        })
        .collect();
    println!("{}", serde_json::Value::Array(objects));
}

fn bench_compile(bits: &[u32], reps: u32, csv: Option<PathBuf>, json: bool) -> u8 {
    let records = bench_construction(bits, reps);
    if !json {
        for r in &records {
            println!(
                "n={} construction={:.3e}s node_count={} (reps={}, {} {})",
                r.n,
                r.mean_construction.as_secs_f64(),
                r.node_count,
                r.repetitions,
                r.host,
                r.profile
            );
        }
    }
    let rows: Vec<CsvRow> = records
        .iter()
        .map(|r| {
            [
                r.n.to_string(),
                String::new(),
                String::new(),
                String::new(),
                format!("{:.9}", r.mean_construction.as_secs_f64()),
                r.node_count.to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
            ]
        })
        .collect();
    if json {
        print_json_rows(&rows);
        if let Some(path) = csv.as_ref() {
            if write_csv(Some(path), &rows).is_err() {
                eprintln!("error: could not write CSV");
                return 1;
            }
        }
    } else if write_csv(csv.as_ref(), &rows).is_err() {
        eprintln!("error: could not write CSV");
        return 1;
    }
    0
}

fn ratio_rows(summary: &RatioSummary) -> Vec<CsvRow> {
    let mut rows = Vec::new();
    let fill = |a: Option<u64>, flags: &str, c: &qfactor_core::GateCounts, red: Option<f64>| -> CsvRow {
        [
            summary.n.to_string(),
            summary.modulus.to_string(),
            a.map(|a| a.to_string()).unwrap_or_default(),
            flags.to_string(),
            String::new(),
            String::new(),
            c.one_qubit.to_string(),
            c.two_qubit.to_string(),
            c.three_qubit.to_string(),
            c.total().to_string(),
            red.map(|r| format!("{r:.6}")).unwrap_or_default(),
        ]
    };
    // baseline total is base-independent; reconstruct its row from totals
    let baseline = qfactor_core::GateCounts {
        one_qubit: 0,
        two_qubit: 0,
        three_qubit: summary.baseline_total,
        measurements: 0,
        resets: 0,
        count_zero_angle: true,
    };
    let mut base_row = fill(None, "none", &baseline, Some(0.0));
    base_row[6] = String::new();
    base_row[7] = String::new();
    base_row[8] = String::new();
    base_row[9] = summary.baseline_total.to_string();
    rows.push(base_row);
    for (a, counts, red) in &summary.random_a {
        rows.push(fill(Some(*a), "all", counts, Some(*red)));
    }
    rows.push(fill(Some(2), "all", &summary.a2_counts, Some(summary.a2_reduction)));
    rows
}

fn bench_ratio_cmd(bits: &[u32], samples: u32, seed: u64, csv: Option<PathBuf>, json: bool) -> u8 {
    if bits.iter().any(|&b| b < 4) {
        return usage_error("ratio benchmarks need bit widths of at least 4");
    }
    if samples == 0 {
        return usage_error("need at least one sample per bit width");
    }
    match bench_ratio(bits, samples, seed) {
        Ok(summaries) => {
            let mut rows = Vec::new();
            for s in &summaries {
                if !json {
                    println!(
                        "n={} N={} t={} baseline={} mean_reduction={:.1}% a2_reduction={:.1}%",
                        s.n,
                        s.modulus,
                        s.t,
                        s.baseline_total,
                        100.0 * s.mean_reduction,
                        100.0 * s.a2_reduction
                    );
                }
                rows.extend(ratio_rows(s));
            }
            if json {
                print_json_rows(&rows);
                if let Some(path) = csv.as_ref() {
                    if write_csv(Some(path), &rows).is_err() {
                        eprintln!("error: could not write CSV");
                        return 1;
                    }
                }
            } else if write_csv(csv.as_ref(), &rows).is_err() {
                eprintln!("error: could not write CSV");
                return 1;
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
