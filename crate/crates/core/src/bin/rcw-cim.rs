use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rcw_cim::cim_macro::{compute_tile, IntMatrix, PipelineMode, PrecisionMode};
use rcw_cim::config::{ConfigLayer, RunConfig};
use rcw_cim::cost_model::{dram_access, loopnest_oracle, Dataflow, MatmulDims, TileDims};
use rcw_cim::experiments::{reproduce, rows_to_csv, rows_to_json, Figure, ReportRow};
use rcw_cim::nonlinear::accuracy::{accuracy_report, parse_rows, seeded_gammas, seeded_rows};
use rcw_cim::nonlinear::{build_lut, LutMethod, LutTable};
use rcw_cim::scheduler::{end_to_end, Features};
use rcw_cim::workload::{decode_workload, prefill_workload};
use rcw_cim::Error;

#[derive(Parser)]
#[command(
    name = "rcw-cim",
    version,
    about = "Digital CIM accelerator cost models and simulator"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// DRAM traffic and CIM updates of one GEMM under every dataflow.
    Cost(CostArgs),
    /// End-to-end latency of a prefill or decode phase.
    Schedule(ScheduleArgs),
    /// Regenerate a figure or table bundle with targets and PASS/FAIL.
    Reproduce(ReproduceArgs),
    /// Accuracy and fusion latency of the binary16 nonlinear units.
    Nonlinear(NonlinearArgs),
    /// Per-bank event trace of one macro tile.
    Trace(TraceArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Run configuration: `--config` file plus per-key overrides.
#[derive(Args)]
struct ConfigArgs {
    /// Flat TOML file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seq_len: Option<u64>,
    #[arg(long)]
    kv_len: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tile_m: Option<u64>,
    #[arg(long)]
    tile_n: Option<u64>,
    #[arg(long)]
    tile_k: Option<u64>,
    #[arg(long)]
    dram_efficiency: Option<f64>,
    #[arg(long)]
    group_size: Option<usize>,
    /// Dataflow used when WS-OCS is off (WS, WS-OS, IS-OS).
    #[arg(long)]
    baseline_dataflow: Option<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> rcw_cim::Result<RunConfig> {
        let flags = ConfigLayer {
            seq_len: self.seq_len,
            kv_len: self.kv_len,
            seed: self.seed,
            tile_m: self.tile_m,
            tile_n: self.tile_n,
            tile_k: self.tile_k,
            dram_efficiency: self.dram_efficiency,
            group_size: self.group_size,
            baseline_dataflow: self.baseline_dataflow.clone(),
            ..Default::default()
        };
        let file = match &self.config {
            Some(p) => ConfigLayer::from_file(p)?,
            None => ConfigLayer::default(),
        };
        flags.over(file).resolve()
    }
}

#[derive(Args)]
#[allow(non_snake_case)]
struct CostArgs {
    #[arg(long = "M")]
    M: u64,
    #[arg(long = "N")]
    N: u64,
    #[arg(long = "K")]
    K: u64,
    #[arg(long)]
    m: u64,
    #[arg(long)]
    n: u64,
    #[arg(long)]
    k: u64,
    /// Omit the WS-OCS priming load (literal closed form).
    #[arg(long)]
    no_first_load: bool,
    /// Cross-check every row against the loop-nest replay.
    #[arg(long)]
    oracle: bool,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum PhaseArg {
    Prefill,
    Decode,
}

#[derive(Args)]
struct ScheduleArgs {
    #[arg(long, value_enum, default_value = "prefill")]
    phase: PhaseArg,
    #[arg(long)]
    no_ws_ocs: bool,
    #[arg(long)]
    no_rcw: bool,
    #[arg(long)]
    no_fusion: bool,
    /// `json` prints the full report; `csv` prints per-GEMM rows.
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[command(flatten)]
    cfg: ConfigArgs,
}

#[derive(Args)]
struct ReproduceArgs {
    /// fig7a, fig7b, fig9a, fig9b, table2 or all.
    #[arg(default_value = "all")]
    figure: String,
    /// Directory for `<figure>.csv` and `<figure>.json`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[command(flatten)]
    cfg: ConfigArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum LutArg {
    Endpoint,
    Minimax,
}

#[derive(Args)]
struct NonlinearArgs {
    /// Rows from a file (one row per line) instead of the seeded generator.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    rows: usize,
    #[arg(long, default_value_t = 1024)]
    max_len: usize,
    #[arg(long, value_enum, default_value = "endpoint")]
    lut_method: LutArg,
    #[arg(long, default_value_t = -8.0, allow_hyphen_values = true)]
    lut_lo: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    lut_hi: f64,
    /// Load LUT coefficients from CSV instead of building them.
    #[arg(long)]
    lut_file: Option<PathBuf>,
    /// Write the LUT used to this CSV.
    #[arg(long)]
    export_lut: Option<PathBuf>,
    #[command(flatten)]
    cfg: ConfigArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Serialized,
    Rcw,
}

#[derive(Clone, Copy, ValueEnum)]
enum PrecArg {
    Int4,
    Int8,
}

#[derive(Args)]
struct TraceArgs {
    /// Input rows streamed through the tile.
    #[arg(long, default_value_t = 16)]
    rows: usize,
    /// Reduction length (input columns, weight rows).
    #[arg(long, default_value_t = 64)]
    inner: usize,
    /// Output columns.
    #[arg(long, default_value_t = 32)]
    cols: usize,
    #[arg(long, value_enum, default_value = "rcw")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "int4")]
    precision: PrecArg,
    /// Skip the concurrent write of the next weight tile.
    #[arg(long)]
    no_update: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Usage, configuration or tiling problem.
const EXIT_USAGE: u8 = 2;
/// A reproduced metric or oracle check missed its tolerance.
const EXIT_FAIL: u8 = 1;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Cost(a) => cmd_cost(&a),
        Cmd::Schedule(a) => cmd_schedule(&a),
        Cmd::Reproduce(a) => cmd_reproduce(&a),
        Cmd::Nonlinear(a) => cmd_nonlinear(&a),
        Cmd::Trace(a) => cmd_trace(&a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAIL),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn write_text(path: Option<&PathBuf>, text: &str) -> rcw_cim::Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => io::stdout().write_all(text.as_bytes()).map_err(Error::from),
    }
}

#[derive(serde::Serialize)]
struct CostRow {
    dataflow: String,
    input_elems: u64,
    weight_elems: u64,
    output_elems: u64,
    cim_update_elems: u64,
    dram_elems: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<&'static str>,
}

fn cmd_cost(a: &CostArgs) -> rcw_cim::Result<bool> {
    let dims = MatmulDims::new(a.M, a.N, a.K)?;
    let tiles = TileDims::new(a.m, a.n, a.k);
    let first = !a.no_first_load;
    let mut rows = Vec::new();
    let mut ok = true;
    for df in Dataflow::ALL {
        let c = dram_access(dims, tiles, df, first)?;
        let oracle = if a.oracle {
            let pass = loopnest_oracle(dims, tiles, df, first)? == c;
            ok &= pass;
            Some(if pass { "PASS" } else { "FAIL" })
        } else {
            None
        };
        rows.push(CostRow {
            dataflow: df.name().to_string(),
            input_elems: c.input_elems,
            weight_elems: c.weight_elems,
            output_elems: c.output_elems,
            cim_update_elems: c.cim_update_elems,
            dram_elems: c.dram_elems(),
            oracle,
        });
    }
    let text = match a.format {
        Format::Json => {
            serde_json::to_string_pretty(&rows).map_err(|e| Error::Io(e.to_string()))? + "\n"
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in &rows {
                w.serialize(r)?;
            }
            String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.to_string()))?)
                .map_err(|e| Error::Io(e.to_string()))?
        }
    };
    write_text(None, &text)?;
    Ok(ok)
}

fn cmd_schedule(a: &ScheduleArgs) -> rcw_cim::Result<bool> {
    let cfg = a.cfg.resolve()?;
    let w = match a.phase {
        PhaseArg::Prefill => prefill_workload(&cfg.model, cfg.seq_len)?,
        PhaseArg::Decode => decode_workload(&cfg.model, cfg.kv_len)?,
    };
    let features = Features {
        ws_ocs: !a.no_ws_ocs,
        rcw: !a.no_rcw,
        fusion: !a.no_fusion,
    };
    let report = end_to_end(&w, &cfg.system, features)?;
    let text = match a.format {
        Format::Json => {
            serde_json::to_string_pretty(&report).map_err(|e| Error::Io(e.to_string()))? + "\n"
        }
        Format::Csv => report.gemm_csv()?,
    };
    write_text(None, &text)?;
    Ok(true)
}

fn cmd_reproduce(a: &ReproduceArgs) -> rcw_cim::Result<bool> {
    let cfg = a.cfg.resolve()?;
    let figures: Vec<Figure> = if a.figure.eq_ignore_ascii_case("all") {
        Figure::ALL.to_vec()
    } else {
        vec![a.figure.parse()?]
    };
    if let Some(dir) = &a.out_dir {
        fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    }
    let setup = cfg.setup();
    let mut ok = true;
    for fig in figures {
        let rows: Vec<ReportRow> = reproduce(fig, &setup)?;
        for r in &rows {
            println!("{}", r.summary());
            ok &= r.passed();
        }
        if let Some(dir) = &a.out_dir {
            write_text(Some(&dir.join(format!("{fig}.csv"))), &rows_to_csv(&rows)?)?;
            write_text(
                Some(&dir.join(format!("{fig}.json"))),
                &(rows_to_json(&rows)? + "\n"),
            )?;
        }
    }
    Ok(ok)
}

fn cmd_nonlinear(a: &NonlinearArgs) -> rcw_cim::Result<bool> {
    let cfg = a.cfg.resolve()?;
    let lut = match &a.lut_file {
        Some(p) => LutTable::read_csv(
            fs::File::open(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?,
        )?,
        None => build_lut(
            a.lut_lo,
            a.lut_hi,
            match a.lut_method {
                LutArg::Endpoint => LutMethod::Endpoint,
                LutArg::Minimax => LutMethod::Minimax,
            },
        )?,
    };
    if let Some(p) = &a.export_lut {
        let f = fs::File::create(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
        lut.write_csv(f)?;
    }
    let rows = match &a.input {
        Some(p) => parse_rows(
            &fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?,
        )?,
        None => seeded_rows(cfg.seed, a.rows, a.max_len),
    };
    let gammas = seeded_gammas(cfg.seed, &rows);
    let report = accuracy_report(&rows, &gammas, cfg.system.groups, &lut, &cfg.system.timing)?;
    let out = serde_json::json!({ "seed": cfg.seed, "report": report });
    let text = serde_json::to_string_pretty(&out).map_err(|e| Error::Io(e.to_string()))?;
    write_text(None, &(text + "\n"))?;
    Ok(true)
}

fn cmd_trace(a: &TraceArgs) -> rcw_cim::Result<bool> {
    let cfg = RunConfig::default().system.cluster.macro_cfg;
    let (prec, bits) = match a.precision {
        PrecArg::Int4 => (PrecisionMode::DualInt4, 4),
        PrecArg::Int8 => (PrecisionMode::Int8, 8),
    };
    let mode = match a.mode {
        ModeArg::Serialized => PipelineMode::Serialized,
        ModeArg::Rcw => PipelineMode::Rcw,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let input = IntMatrix::random(&mut rng, a.rows, a.inner, 8);
    let stored = IntMatrix::random(&mut rng, a.inner, a.cols, bits);
    let next = IntMatrix::random(&mut rng, a.inner, a.cols, bits);
    let (_, trace) = compute_tile(
        &cfg,
        mode,
        prec,
        &input,
        &stored,
        (!a.no_update).then_some(&next),
    )?;
    let mut buf = Vec::new();
    trace.write_csv(&mut buf)?;
    write_text(a.out.as_ref(), &String::from_utf8_lossy(&buf))?;
    eprintln!(
        "{} total {} cycles: phase1 {} phase2 {} compute {} update {} (exposed {})",
        trace.mode,
        trace.total_cycles,
        trace.phase1_cycles,
        trace.phase2_cycles,
        trace.compute_cycles,
        trace.update_cycles,
        trace.update_cycles_exposed
    );
    Ok(true)
}
