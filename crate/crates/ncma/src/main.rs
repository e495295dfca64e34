//! Command-line front end for the NCMA Monte Carlo harness.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ncma::mac::read_trace;
use ncma::modem::ModScheme;
use ncma::sim::{
    emit_csv, load_config, parse_snr_grid, run_ber_sweep, run_phy_stats, run_throughput, Decoder,
    ExperimentConfig, PhaseSpec, ResultRow, SimError, ThroughputSource, VerifyKind,
};

#[derive(Parser)]
#[command(
    name = "ncma",
    about = "Monte Carlo toolkit for network-coded multiple access",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Post-decoding bit and frame error rates over an SNR grid.
    Ber(RunArgs),
    /// Per-slot reception event statistics over an SNR grid.
    Phystats(RunArgs),
    /// Session throughput against the analytic upper bound.
    Throughput(ThroughputArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML config file; explicit flags override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Modulation scheme.
    #[arg(long)]
    scheme: Option<ModScheme>,
    /// Demodulate-and-decode chain.
    #[arg(long)]
    decoder: Option<Decoder>,
    /// Receive antennas, 1 or 2.
    #[arg(long)]
    antennas: Option<u8>,
    /// SNR grid in dB: comma list "4,6,8" or range "4:2:12".
    #[arg(long)]
    snr: Option<String>,
    /// Phase offset at antenna 1: radians or "uniform".
    #[arg(long)]
    dphi1: Option<PhaseSpec>,
    /// Phase offset at antenna 2: radians or "uniform".
    #[arg(long)]
    dphi2: Option<PhaseSpec>,
    /// Monte Carlo repetitions per SNR point.
    #[arg(long)]
    trials: Option<u64>,
    /// Base RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Information bits per frame in BER sweeps.
    #[arg(long)]
    frame_bits: Option<usize>,
    /// Shortlist size for pnc_nearest_k, 1 or 4.
    #[arg(long)]
    nearest_k: Option<usize>,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ThroughputArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Slot outcome trace file; overrides --mode.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Slot source when no trace is given.
    #[arg(long, value_enum, default_value_t = SlotSourceArg::Sampled)]
    mode: SlotSourceArg,
    /// Slots per session.
    #[arg(long)]
    beacons: Option<u64>,
    /// Packets needed to decode one of A's messages.
    #[arg(long)]
    l_a: Option<usize>,
    /// Packets needed to decode one of B's messages.
    #[arg(long)]
    l_b: Option<usize>,
    /// Packets per encoded message.
    #[arg(long)]
    n_packets: Option<usize>,
    /// Payload bytes per packet.
    #[arg(long)]
    packet_bytes: Option<usize>,
    /// Packet report validation: genie or crc.
    #[arg(long)]
    verify: Option<VerifyKind>,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum SlotSourceArg {
    /// Sample slot outcomes from the measured event distribution.
    Sampled,
    /// Run the full PHY chain every slot.
    Full,
}

fn build_config(args: &RunArgs) -> Result<ExperimentConfig, SimError> {
    let mut cfg = match &args.config {
        Some(path) => load_config(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(v) = args.scheme {
        cfg.scheme = v;
    }
    if let Some(v) = args.decoder {
        cfg.decoder = v;
    }
    if let Some(v) = args.antennas {
        cfg.antennas = v;
    }
    if let Some(s) = &args.snr {
        cfg.snr_db = parse_snr_grid(s)?;
    }
    if let Some(v) = args.dphi1 {
        cfg.dphi1 = v;
    }
    if let Some(v) = args.dphi2 {
        cfg.dphi2 = v;
    }
    if let Some(v) = args.trials {
        cfg.trials = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.frame_bits {
        cfg.frame_source_bits = v;
    }
    if let Some(v) = args.nearest_k {
        cfg.nearest_k = v;
    }
    Ok(cfg)
}

fn apply_throughput_overrides(cfg: &mut ExperimentConfig, args: &ThroughputArgs) {
    if let Some(v) = args.beacons {
        cfg.n_beacons = v;
    }
    if let Some(v) = args.l_a {
        cfg.l_a = v;
    }
    if let Some(v) = args.l_b {
        cfg.l_b = v;
    }
    if let Some(v) = args.n_packets {
        cfg.n_packets = v;
    }
    if let Some(v) = args.packet_bytes {
        cfg.packet_bytes = v;
    }
    if let Some(v) = args.verify {
        cfg.verify = v;
    }
}

fn write_rows(rows: &[ResultRow], out: &Option<PathBuf>) -> Result<(), SimError> {
    let io_err = |path: &PathBuf, e: std::io::Error| SimError::Io {
        path: path.display().to_string(),
        detail: e.to_string(),
    };
    match out {
        Some(path) => {
            let file = File::create(path).map_err(|e| io_err(path, e))?;
            let mut w = BufWriter::new(file);
            emit_csv(rows, &mut w).map_err(|e| io_err(path, e))?;
            w.flush().map_err(|e| io_err(path, e))
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            emit_csv(rows, &mut lock).map_err(|e| SimError::Io {
                path: "stdout".to_string(),
                detail: e.to_string(),
            })
        }
    }
}

fn run(cli: Cli) -> Result<(), SimError> {
    match cli.command {
        Command::Ber(args) => {
            let cfg = build_config(&args)?;
            let rows = run_ber_sweep(&cfg)?;
            write_rows(&rows, &args.out)
        }
        Command::Phystats(args) => {
            let cfg = build_config(&args)?;
            let rows = run_phy_stats(&cfg)?;
            write_rows(&rows, &args.out)
        }
        Command::Throughput(args) => {
            let mut cfg = build_config(&args.run)?;
            apply_throughput_overrides(&mut cfg, &args);
            let source = match &args.trace {
                Some(path) => {
                    let file = File::open(path).map_err(|e| SimError::Io {
                        path: path.display().to_string(),
                        detail: e.to_string(),
                    })?;
                    let outcomes = read_trace(BufReader::new(file)).map_err(|e| {
                        SimError::Config(format!("{}: {}", path.display(), e))
                    })?;
                    ThroughputSource::Trace(outcomes)
                }
                None => match args.mode {
                    SlotSourceArg::Sampled => ThroughputSource::Sampled,
                    SlotSourceArg::Full => ThroughputSource::FullPhy,
                },
            };
            let rows = run_throughput(&cfg, source)?;
            write_rows(&rows, &args.run.out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(2)
        }
    }
}
