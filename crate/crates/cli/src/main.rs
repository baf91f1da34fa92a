use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use log::info;
use serde_json::json;

use gibbs_core::experiments::{run_suite, ExperimentConfig, PotentialConfig, SuiteId};
use gibbs_core::fock::{
    build_interacting_hamiltonian, cannon_match, free_canonical_occupations, reduced_dm, relaxed_sector_weights,
    thermal_state, wmatrix_elements,
};
use gibbs_core::massdist::{split_densities, EtaGrid};
use gibbs_core::measures::{
    mode_moments, sample_measure, write_batch, write_batch_csv, MeasureSpec, SamplerOptions, SphereConvention,
};
use gibbs_core::spectral::{read_basis, solve_spectrum, write_basis, write_eigenvalues_csv, GridSpec, Scheme, SpectralBasis};

#[derive(Parser)]
#[command(name = "gibbs", version, about = "Bosonic Gibbs ensembles in an anharmonic trap")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MeasureArg {
    Gaussian,
    Penalized,
    Conditioned,
    Sphere,
    Interacting,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConventionArg {
    Unit,
    Radius,
}

#[derive(clap::Args)]
struct PotentialArgs {
    /// `gaussian_bump`, `step_well`, `delta_approx`, or `zero`.
    #[arg(long, default_value = "gaussian_bump")]
    potential: String,
    #[arg(long, default_value_t = 0.5)]
    width: f64,
    #[arg(long, default_value_t = 1.0)]
    depth: f64,
}

impl PotentialArgs {
    fn build(&self) -> Result<gibbs_core::measures::InteractionPotential> {
        Ok(PotentialConfig { kind: self.potential.clone(), width: self.width, depth: self.depth }.build()?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the lowest eigenpairs of -d²/dx² + |x|^s.
    Spectrum {
        /// Trap exponent, or `inf` for the Dirichlet box on [0, 1].
        #[arg(long)]
        s: String,
        #[arg(long)]
        modes: usize,
        #[arg(long, default_value_t = 1024)]
        grid: usize,
        /// Domain half-width (ignored for the box).
        #[arg(long, default_value_t = 3.0)]
        half_width: f64,
        /// Finite-difference order, 2 or 4.
        #[arg(long, default_value_t = 4)]
        scheme: u8,
        #[arg(long)]
        out: PathBuf,
        /// Also write `j, lambda_j` to this CSV file.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Mass densities of the low and high modes around a split.
    Density {
        #[arg(long)]
        basis: PathBuf,
        #[arg(long)]
        split_lambda: f64,
        #[arg(long)]
        eta_max: f64,
        #[arg(long, default_value_t = 4001)]
        eta_points: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw a batch from a classical field measure.
    Sample {
        #[arg(long)]
        basis: PathBuf,
        #[arg(long, value_enum)]
        measure: MeasureArg,
        #[arg(long)]
        m: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        g: f64,
        /// Energy cutoff; modes with eigenvalue at most this are kept. Defaults to all modes.
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum, default_value = "radius")]
        convention: ConventionArg,
        #[command(flatten)]
        potential: PotentialArgs,
        #[arg(long, default_value_t = 1)]
        grid_stride: usize,
        #[arg(long)]
        strict: bool,
        /// Batch file: `.csv` for text, anything else for the binary container.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Canonical ensemble at fixed particle number.
    Canonical {
        #[arg(long)]
        basis: PathBuf,
        #[arg(long)]
        modes: usize,
        #[arg(long = "N")]
        n: usize,
        #[arg(long = "T")]
        t: f64,
        /// Pair coupling; nonzero switches to exact diagonalization.
        #[arg(long, default_value_t = 0.0)]
        g: f64,
        #[command(flatten)]
        potential: PotentialArgs,
        /// Directory for the JSON summary and CSV matrices.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sector weights of the mass-relaxed canonical state.
    Relax {
        #[arg(long)]
        basis: PathBuf,
        #[arg(long)]
        modes: Option<usize>,
        #[arg(long)]
        m: f64,
        #[arg(long = "T")]
        t: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        n_max: Option<usize>,
    },
    /// Increment matching between occupation states with N and N+1 particles.
    Cannon {
        /// Comma-separated bound vector with odd sum 2N+1.
        #[arg(long, value_delimiter = ',')]
        g_vector: Vec<u32>,
    },
    /// Run verification suites and write their reports.
    Verify {
        /// `E1`..`E9` or `all`.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "reports")]
        out: PathBuf,
        #[arg(long)]
        strict: bool,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn parse_s(s: &str) -> Result<f64> {
    match s.trim().to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "box" => Ok(f64::INFINITY),
        other => other.parse().with_context(|| format!("invalid trap exponent {s:?}")),
    }
}

fn load_basis(path: &Path) -> Result<SpectralBasis> {
    read_basis(path).with_context(|| format!("reading basis {}", path.display()))
}

fn print_json(value: &serde_json::Value) -> Result<()> {
    use std::io::Write;
    let text = serde_json::to_string_pretty(value)?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn write_matrix_csv(path: &Path, rows: usize, cols: usize, at: impl Fn(usize, usize) -> f64) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for i in 0..rows {
        w.write_record((0..cols).map(|j| format!("{:.17e}", at(i, j))))?;
    }
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Spectrum { s, modes, grid, half_width, scheme, out, csv } => {
            let s = parse_s(&s)?;
            let scheme = Scheme::from_order(scheme).with_context(|| format!("unsupported scheme order {scheme}"))?;
            let half_width = if s.is_finite() { half_width } else { 1.0 };
            let basis = solve_spectrum(s, GridSpec::new(half_width, grid, scheme), modes)?;
            write_basis(&basis, &out)?;
            if let Some(csv) = csv {
                write_eigenvalues_csv(&basis, &csv)?;
            }
            print_json(&json!({
                "s": if s.is_finite() { json!(s) } else { json!("inf") },
                "modes": basis.n_modes(),
                "eigenvalues": basis.eigenvalues,
                "discretization_errors": basis.discretization_errors,
                "out": out,
            }))?;
        }
        Command::Density { basis, split_lambda, eta_max, eta_points, out } => {
            let basis = load_basis(&basis)?;
            let grid = EtaGrid::covering(eta_max, eta_points)?;
            let split = split_densities(&basis.eigenvalues, split_lambda, grid)?;
            let mut w = csv::Writer::from_path(&out)?;
            w.write_record(["eta", "f_high", "g_low", "f0"])?;
            for i in 0..grid.len {
                let eta = grid.eta(i);
                w.write_record([
                    format!("{eta:.17e}"),
                    format!("{:.17e}", split.high.value_at(eta)),
                    format!("{:.17e}", split.low.values[i]),
                    format!("{:.17e}", split.full.values[i]),
                ])?;
            }
            w.flush()?;
            print_json(&json!({
                "low_modes": split.low.rate_set.len(),
                "high_modes": split.high.rate_set.len(),
                "clipped_mass": [split.low.clipped_mass, split.high.clipped_mass, split.full.clipped_mass],
                "f0_integral": split.full.integral(),
                "out": out,
            }))?;
        }
        Command::Sample {
            basis,
            measure,
            m,
            eps,
            g,
            lambda,
            n,
            seed,
            convention,
            potential,
            grid_stride,
            strict,
            out,
        } => {
            let full = load_basis(&basis)?;
            let modes = match lambda {
                Some(l) => full.count_below(l),
                None => full.n_modes(),
            };
            if modes == 0 {
                bail!("no modes below the cutoff");
            }
            let basis = full.truncated(modes)?;
            let need_m = || m.context("--m is required for this measure");
            let convention = match convention {
                ConventionArg::Unit => SphereConvention::Unit,
                ConventionArg::Radius => SphereConvention::Radius,
            };
            let spec = match measure {
                MeasureArg::Gaussian => MeasureSpec::free_gaussian(modes),
                MeasureArg::Penalized => MeasureSpec::penalized(modes, need_m()?, eps.context("--eps is required")?),
                MeasureArg::Conditioned => MeasureSpec::conditioned(modes, need_m()?),
                MeasureArg::Sphere if g == 0.0 => MeasureSpec::sphere(modes, need_m()?, convention),
                MeasureArg::Sphere => MeasureSpec::sphere_interacting(modes, need_m()?, g, potential.build()?, convention),
                MeasureArg::Interacting => MeasureSpec::interacting(modes, need_m()?, g, potential.build()?),
            };
            let high = if matches!(measure, MeasureArg::Conditioned) && modes < full.n_modes() {
                let m = need_m()?;
                let cutoff = 0.5 * (full.eigenvalues[modes - 1] + full.eigenvalues[modes]);
                Some(split_densities(&full.eigenvalues, cutoff, EtaGrid::covering(1.5 * m, 30_001)?)?.high)
            } else {
                None
            };
            let opts = SamplerOptions { strict, grid_stride, ..SamplerOptions::default() };
            let batch = sample_measure(&spec, &basis, n, seed, &opts, high.as_ref())?;
            if let Some(out) = &out {
                if out.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
                    write_batch_csv(&batch, out)?;
                } else {
                    write_batch(&batch, out)?;
                }
                info!("wrote {} samples to {}", batch.len(), out.display());
            }
            let moments: Vec<_> = mode_moments(&batch)
                .iter()
                .map(|e| json!({ "estimate": e.value, "stderr": e.stderr }))
                .collect();
            print_json(&json!({
                "mode_masses": moments,
                "ess": batch.ess,
                "acceptance_rate": batch.acceptance_rate,
                "seed": seed,
                "samples": batch.len(),
                "config": batch.spec,
            }))?;
        }
        Command::Canonical { basis, modes, n, t, g, potential, out } => {
            let full = load_basis(&basis)?;
            let rates = full.eigenvalues.get(..modes).context("more modes requested than the basis holds")?;
            if g == 0.0 {
                let c = free_canonical_occupations(rates, n, t)?;
                if let Some(dir) = &out {
                    std::fs::create_dir_all(dir)?;
                    write_matrix_csv(&dir.join("pair_occupations.csv"), modes, modes, |i, j| c.pair_occupations[i][j])?;
                }
                let summary = json!({
                    "N": n, "T": t, "g": 0.0,
                    "log_z": c.log_z,
                    "occupations": c.occupations,
                    "pair_occupations": c.pair_occupations,
                });
                if let Some(dir) = &out {
                    std::fs::write(dir.join("canonical.json"), serde_json::to_string_pretty(&summary)?)?;
                }
                print_json(&summary)?;
            } else {
                let w = wmatrix_elements(&full, modes, &potential.build()?)?;
                let h = build_interacting_hamiltonian(rates, &w, n, g)?;
                let state = thermal_state(&h, t)?;
                let gamma = state.density_matrix();
                let g1 = reduced_dm(&gamma, &h.occupation_basis, 1)?;
                let g2 = if n >= 2 { Some(reduced_dm(&gamma, &h.occupation_basis, 2)?) } else { None };
                if let Some(dir) = &out {
                    std::fs::create_dir_all(dir)?;
                    write_matrix_csv(&dir.join("gamma1.csv"), g1.nrows(), g1.ncols(), |i, j| g1[(i, j)])?;
                    if let Some(g2) = &g2 {
                        write_matrix_csv(&dir.join("gamma2.csv"), g2.nrows(), g2.ncols(), |i, j| g2[(i, j)])?;
                    }
                }
                let rows = |m: &nalgebra::DMatrix<f64>| -> Vec<Vec<f64>> {
                    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
                };
                let summary = json!({
                    "N": n, "T": t, "g": g,
                    "log_z": state.log_z,
                    "entropy": state.entropy(),
                    "sector_dimension": h.occupation_basis.dim(),
                    "gamma1": rows(&g1),
                    "gamma2": g2.as_ref().map(rows),
                });
                if let Some(dir) = &out {
                    std::fs::write(dir.join("canonical.json"), serde_json::to_string_pretty(&summary)?)?;
                }
                print_json(&summary)?;
            }
        }
        Command::Relax { basis, modes, m, t, eps, n_max } => {
            let full = load_basis(&basis)?;
            let d = modes.unwrap_or(full.n_modes());
            let rates = full.eigenvalues.get(..d).context("more modes requested than the basis holds")?;
            let n_max = n_max.unwrap_or_else(|| (m * t + 10.0 * (eps * t * t / 2.0).sqrt()).ceil() as usize + 1);
            let w = relaxed_sector_weights(rates, m, t, eps, n_max)?;
            print_json(&json!({
                "m": m, "T": t, "eps": eps, "n_max": n_max,
                "weights": w.weights,
                "mode": w.mode(),
                "moments": (1..=4).map(|k| w.moment(k)).collect::<Vec<_>>(),
                "lost_mass": w.lost_mass,
            }))?;
        }
        Command::Cannon { g_vector } => {
            let total: u32 = g_vector.iter().sum();
            if total % 2 == 0 {
                bail!("the entries must sum to an odd number 2N+1, got {total}");
            }
            let n = ((total - 1) / 2) as usize;
            let matching = cannon_match(&g_vector, n)?;
            let pairs: Vec<_> = matching
                .pairs()
                .into_iter()
                .zip(&matching.coordinate)
                .map(|((i, j), c)| {
                    json!({ "from": matching.domain[i], "to": matching.codomain[j], "index_pair": [i, j], "coordinate": c })
                })
                .collect();
            print_json(&json!({ "g": g_vector, "N": n, "pairs": pairs }))?;
        }
        Command::Verify { suite, config, out, strict } => {
            let mut cfg = match &config {
                Some(p) => ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
                None => ExperimentConfig::default(),
            };
            cfg.general.strict |= strict;
            let ids: Vec<SuiteId> =
                if suite.eq_ignore_ascii_case("all") { SuiteId::ALL.to_vec() } else { vec![suite.parse()?] };
            let dir = cfg.general.output_dir.clone().filter(|_| out.as_os_str() == "reports").unwrap_or(out);
            let mut all_passed = true;
            for id in ids {
                let report = run_suite(&cfg, id)?;
                report.emit(&dir)?;
                print!("{}", report.summary());
                all_passed &= report.passed();
            }
            return Ok(all_passed);
        }
    }
    Ok(true)
}
