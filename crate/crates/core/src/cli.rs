//! Command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::constants::{ConstantProfile, RC_REFERENCE};
use crate::data::{self, fmt_e6};
use crate::error::{Error, Result};
use crate::fit::{weighted_linear_fit, weighted_log_linear_fit, FitResult};
use crate::gamma::{shield_scan, GammaOptions, GammaSpectrum, IncidentArea, Integration, PathLength};
use crate::manifest::{self, DataDir};
use crate::muon::{
    mean_muon_energy, muon_power_with, stopping_power, DepthIntensityTable, FaceAccounting, MeanEnergyParams,
    MuonOptions, MuonPath, MuonState,
};
use crate::physics::{csl_power, CslParams, DetectorSpec, Material};
use crate::plot::Plot;
use crate::sensitivity::{
    depth_for_lambda, exclusion_contour, lambda_depth_scan, log_grid, SensitivityConfig, DEFAULT_MARGIN,
};
use crate::thermal::{pulse_peak, simulate_trace, steady_gradient, subtract_events, EventEnergy, ThermalSpec, TraceConfig};
use crate::constants::MEV_TO_J;

#[derive(Debug, Parser)]
#[command(name = "csl-budget", version, about = "Background budget for underground CSL bulk-heating experiments")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Directory holding manifest.txt and the data tables it lists
    /// (default: $CSL_BUDGET_DATA_DIR, else the bundled sample data).
    #[arg(long, global = true)]
    pub data_dir: Option<PathBuf>,
    /// Output directory for CSV and SVG files.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Background power must be this many times below the CSL power.
    #[arg(long, global = true, default_value_t = DEFAULT_MARGIN)]
    pub margin: f64,
    /// Muon face accounting: projected, top+sides or all.
    #[arg(long, global = true, default_value = "projected")]
    pub faces: FaceAccounting,
    /// Physical constants: paper or codata.
    #[arg(long, global = true, default_value = "paper")]
    pub constants: ConstantProfile,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Depth-intensity site key in the manifest.
    #[arg(long, global = true, default_value = "standard_rock")]
    pub site: String,
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// 750 g TeO₂ crystal at 10 mK.
    Cuore,
    /// Ten times the mass at 1 mK (extrapolated).
    Upgraded,
}

impl Preset {
    fn detector(self) -> DetectorSpec {
        match self {
            Preset::Cuore => DetectorSpec::cuore_crystal(),
            Preset::Upgraded => DetectorSpec::cube(Material::tellurium_dioxide(), 5.0 * 10f64.cbrt()).expect("valid preset"),
        }
    }

    fn thermal(self) -> ThermalSpec {
        match self {
            Preset::Cuore => ThermalSpec::cuore(),
            Preset::Upgraded => ThermalSpec::upgraded(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Absorber {
    Ge,
    Teo2,
}

#[derive(Debug, Args)]
pub struct DetectorArgs {
    #[arg(long, value_enum, default_value = "ge")]
    pub detector: Absorber,
    /// Cube side in cm (default 10 for Ge, 5 for TeO2).
    #[arg(long)]
    pub side: Option<f64>,
}

impl DetectorArgs {
    fn spec(&self) -> Result<DetectorSpec> {
        let (material, side) = match self.detector {
            Absorber::Ge => (Material::germanium(), 10.0),
            Absorber::Teo2 => (Material::tellurium_dioxide(), 5.0),
        };
        DetectorSpec::cube(material, self.side.unwrap_or(side))
    }
}

#[derive(Debug, Args)]
pub struct MuonArgs {
    #[command(flatten)]
    pub detector: DetectorArgs,
    /// Mean-energy parameter set: lipari_stanev or groom.
    #[arg(long, default_value = "lipari_stanev")]
    pub params: String,
    /// Estimate path length and rate by Monte Carlo with this many samples.
    #[arg(long)]
    pub mc_samples: Option<u64>,
    /// Depth-intensity CSV used instead of the data directory.
    #[arg(long)]
    pub depth_table: Option<PathBuf>,
    /// Depths in km.w.e. (default: the table's depths).
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub depths: Option<Vec<f64>>,
    /// Lower end of the log-linear fit window (km.w.e.).
    #[arg(long, default_value_t = 5.0)]
    pub fit_min: f64,
    /// Upper end of the log-linear fit window (km.w.e.).
    #[arg(long, default_value_t = 10.0)]
    pub fit_max: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AreaArg {
    All,
    One,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PathArg {
    Side,
    Chord,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum IntegrationArg {
    Bins,
    Piecewise,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// CSL heating power, heating per mass and steady temperature rise.
    CslHeating {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        rc: f64,
        #[arg(long, value_enum, default_value = "cuore")]
        preset: Preset,
    },
    /// Gamma power deposited in the detector versus lead shield thickness.
    GammaScan {
        /// Shield thicknesses in cm (default 0..=20 in steps of 1).
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        thickness: Option<Vec<f64>>,
        #[command(flatten)]
        detector: DetectorArgs,
        #[arg(long, value_enum, default_value = "all")]
        area: AreaArg,
        #[arg(long, value_enum, default_value = "side")]
        path: PathArg,
        #[arg(long, value_enum, default_value = "bins")]
        integration: IntegrationArg,
        #[arg(long)]
        spectrum: Option<PathBuf>,
        #[arg(long)]
        shield_table: Option<PathBuf>,
        #[arg(long)]
        detector_table: Option<PathBuf>,
    },
    /// Muon event rate and deposited power versus depth.
    MuonScan {
        #[command(flatten)]
        muon: MuonArgs,
    },
    /// Detectable λ versus depth, or the depth reaching a target λ.
    Sensitivity {
        #[command(flatten)]
        muon: MuonArgs,
        /// Report the shallowest depth where this λ (s⁻¹) becomes detectable.
        #[arg(long)]
        target_lambda: Option<f64>,
    },
    /// Detectable λ as a function of r_c at fixed depths.
    Exclusion {
        #[command(flatten)]
        muon: MuonArgs,
        #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "3.6,6.7")]
        at: Vec<f64>,
        #[arg(long, default_value_t = 1e-9)]
        rc_min: f64,
        #[arg(long, default_value_t = 1e-4)]
        rc_max: f64,
        #[arg(long, default_value_t = 51)]
        points: usize,
    },
    /// Simulated bolometer trace with background pulses and CSL heating.
    Bolometer {
        #[arg(long, value_enum, default_value = "cuore")]
        preset: Preset,
        /// s
        #[arg(long, default_value_t = 100.0)]
        duration: f64,
        /// s
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        /// Poisson background rate (s⁻¹).
        #[arg(long, default_value_t = 1e-7)]
        rate: f64,
        /// Energy per event in MeV (default: mean muon deposit at --depth).
        #[arg(long)]
        energy: Option<f64>,
        /// km.w.e., used for the default event energy.
        #[arg(long, default_value_t = 3.6)]
        depth: f64,
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
        #[arg(long, default_value_t = RC_REFERENCE)]
        rc: f64,
        /// Add thermodynamic fluctuation noise.
        #[arg(long)]
        noise: bool,
        /// Pulse detection threshold in K.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Weighted straight-line fit to two columns of a CSV file.
    Fit {
        input: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        /// Column holding the y uncertainty (default: unweighted).
        #[arg(long)]
        err: Option<String>,
        /// Fit log₁₀ y.
        #[arg(long)]
        log: bool,
        #[arg(long)]
        x_min: Option<f64>,
        #[arg(long)]
        x_max: Option<f64>,
    },
}

struct Ctx<'a> {
    common: &'a Common,
    stdout: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn write_file(&self, name: &str, contents: &str) -> Result<PathBuf> {
        let dir = &self.common.out;
        std::fs::create_dir_all(dir).map_err(|err| Error::Io { path: dir.clone(), err })?;
        let path = dir.join(name);
        std::fs::write(&path, contents).map_err(|err| Error::Io { path: path.clone(), err })?;
        if self.common.verbose > 0 {
            eprintln!("wrote {}", path.display());
        }
        Ok(path)
    }

    fn print(&mut self, text: &str) -> Result<()> {
        self.stdout
            .write_all(text.as_bytes())
            .map_err(|err| Error::Io { path: PathBuf::from("<stdout>"), err })
    }

    fn data_dir(&self) -> Result<Option<DataDir>> {
        manifest::resolve_data_dir(self.common.data_dir.as_deref())
            .map(|d| DataDir::open(&d))
            .transpose()
    }

    fn depth_table(&self, path: Option<&Path>) -> Result<DepthIntensityTable> {
        if let Some(p) = path {
            return data::load_depth_intensity(p, &self.common.site);
        }
        match self.data_dir()? {
            Some(d) => d.depth_intensity(&self.common.site),
            None if self.common.site == "standard_rock" => Ok(manifest::bundled_standard_rock()),
            None => Err(Error::param(format!(
                "no bundled depth-intensity table for site `{}`; pass --data-dir or --depth-table",
                self.common.site
            ))),
        }
    }

    fn sensitivity_config(&self, args: &MuonArgs) -> Result<SensitivityConfig> {
        if !(self.common.margin > 0.0) || !self.common.margin.is_finite() {
            return Err(Error::param(format!("margin must be > 0, got {}", self.common.margin)));
        }
        let params = MeanEnergyParams::by_label(&args.params)
            .ok_or_else(|| Error::param(format!("unknown parameter set `{}` (lipari_stanev, groom)", args.params)))?;
        let path = match args.mc_samples {
            Some(samples) => MuonPath::MonteCarlo {
                samples,
                seed: self.common.seed,
            },
            None => MuonPath::Side,
        };
        Ok(SensitivityConfig {
            params,
            margin_factor: self.common.margin,
            muon: MuonOptions {
                faces: self.common.faces,
                path,
                constants: self.common.constants,
            },
        })
    }
}

fn depths_or_table(args: &MuonArgs, table: &DepthIntensityTable) -> Result<Vec<f64>> {
    let depths = match &args.depths {
        Some(d) => d.clone(),
        None => table.rows().iter().map(|r| r.depth).collect(),
    };
    if depths.is_empty() {
        return Err(Error::param("no depths given"));
    }
    Ok(depths)
}

/// Log-linear fit of `(x, y, σ)` restricted to `[lo, hi]`; `None` when fewer
/// than two usable points remain.
fn window_fit(points: &[(f64, f64, f64)], lo: f64, hi: f64) -> Result<Option<FitResult>> {
    let pts: Vec<_> = points
        .iter()
        .copied()
        .filter(|&(x, y, _)| x >= lo && x <= hi && y > 0.0)
        .collect();
    if pts.len() < 2 {
        return Ok(None);
    }
    weighted_log_linear_fit(&pts).map(Some)
}

fn fit_line(label: &str, fit: &FitResult) -> String {
    format!(
        "{label}: log10(y) = {:.4} x {:+.4}  (slope err {:.4}, intercept err {:.4}, n = {})\n",
        fit.slope, fit.intercept, fit.slope_err, fit.intercept_err, fit.n_points
    )
}

/// Parses arguments and runs; errors carry the exit code.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    let mut ctx = Ctx {
        common: &cli.common,
        stdout,
    };
    match &cli.command {
        Command::CslHeating { lambda, rc, preset } => csl_heating(&mut ctx, *lambda, *rc, *preset),
        Command::GammaScan {
            thickness,
            detector,
            area,
            path,
            integration,
            spectrum,
            shield_table,
            detector_table,
        } => {
            let thicknesses = thickness.clone().unwrap_or_else(|| (0..=20).map(f64::from).collect());
            let options = GammaOptions {
                area: match area {
                    AreaArg::All => IncidentArea::AllFaces,
                    AreaArg::One => IncidentArea::OneFace,
                },
                path: match path {
                    PathArg::Side => PathLength::Side,
                    PathArg::Chord => PathLength::MeanChord,
                },
                integration: match integration {
                    IntegrationArg::Bins => Integration::BinSum,
                    IntegrationArg::Piecewise => Integration::PiecewiseFit,
                },
            };
            let inputs = GammaInputs {
                spectrum: spectrum.as_deref(),
                shield_table: shield_table.as_deref(),
                detector_table: detector_table.as_deref(),
            };
            gamma_scan(&mut ctx, &thicknesses, &detector.spec()?, &options, inputs)
        }
        Command::MuonScan { muon } => muon_scan(&mut ctx, muon),
        Command::Sensitivity { muon, target_lambda } => sensitivity(&mut ctx, muon, *target_lambda),
        Command::Exclusion {
            muon,
            at,
            rc_min,
            rc_max,
            points,
        } => exclusion(&mut ctx, muon, at, *rc_min, *rc_max, *points),
        Command::Bolometer {
            preset,
            duration,
            dt,
            rate,
            energy,
            depth,
            lambda,
            rc,
            noise,
            threshold,
        } => {
            let args = BolometerArgs {
                preset: *preset,
                duration: *duration,
                dt: *dt,
                rate: *rate,
                energy: *energy,
                depth: *depth,
                lambda: *lambda,
                rc: *rc,
                noise: *noise,
                threshold: *threshold,
            };
            bolometer(&mut ctx, &args)
        }
        Command::Fit {
            input,
            x,
            y,
            err,
            log,
            x_min,
            x_max,
        } => fit(&mut ctx, input, x, y, err.as_deref(), *log, *x_min, *x_max),
    }
}

fn check_csl_args(lambda: f64, rc: f64) -> Result<CslParams> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::param(format!("--lambda must be >= 0, got {lambda}")));
    }
    if !(rc > 0.0) || !rc.is_finite() {
        return Err(Error::param(format!("--rc must be > 0, got {rc}")));
    }
    CslParams::new(lambda, rc)
}

fn csl_heating(ctx: &mut Ctx, lambda: f64, rc: f64, preset: Preset) -> Result<()> {
    let params = check_csl_args(lambda, rc)?;
    let det = preset.detector();
    let thermal = preset.thermal();
    let mass = det.mass_kg();
    let power = csl_power(&params, mass)?;
    let rows = [
        ("mass", mass, "kg"),
        ("power", power, "W"),
        ("heating_per_mass", power / mass, "W/kg"),
        ("steady_gradient", steady_gradient(&thermal, power), "K"),
        ("time_constant", thermal.time_constant(), "s"),
    ];
    let mut out = String::from("quantity,value,unit\n");
    for (q, v, u) in rows {
        out.push_str(&format!("{q},{},{u}\n", fmt_e6(v)));
    }
    ctx.print(&out)
}

struct GammaInputs<'a> {
    spectrum: Option<&'a Path>,
    shield_table: Option<&'a Path>,
    detector_table: Option<&'a Path>,
}

fn gamma_scan(
    ctx: &mut Ctx,
    thicknesses: &[f64],
    det: &DetectorSpec,
    options: &GammaOptions,
    inputs: GammaInputs,
) -> Result<()> {
    if thicknesses.is_empty() {
        return Err(Error::param("empty thickness list"));
    }
    let dir = ctx.data_dir()?;
    let det_name = det.material.name.clone();
    let table = |path: Option<&Path>, name: &str| match (path, &dir) {
        (Some(p), _) => data::load_attenuation(
            p,
            Material::by_name(name).ok_or_else(|| Error::param(format!("unknown material `{name}`")))?,
        ),
        (None, Some(d)) => d.attenuation(name),
        (None, None) => match name {
            "Pb" => Ok(manifest::bundled_pb_table()),
            "Ge" => Ok(manifest::bundled_ge_table()),
            _ => Err(Error::param(format!("no bundled attenuation table for `{name}`; pass --data-dir"))),
        },
    };
    let shield_table = table(inputs.shield_table, "Pb")?;
    let det_table = table(inputs.detector_table, &det_name)?;
    let spectrum: GammaSpectrum = match (inputs.spectrum, &dir) {
        (Some(p), _) => data::load_gamma_spectrum(p)?,
        (None, Some(d)) => d.spectrum()?,
        (None, None) => manifest::bundled_spectrum(),
    };

    let rows = shield_scan(det, &spectrum, &shield_table, &det_table, thicknesses, options)?;
    ctx.write_file("gamma_scan.csv", &data::write_shield_scan(&rows))?;
    let plot = Plot::new("Gamma power vs shield thickness", "Pb thickness (cm)", "power (W)")
        .log_y(true)
        .with_series("gamma", rows.iter().map(|r| (r.thickness, r.power)).collect());
    ctx.write_file("gamma_scan.svg", &plot.to_svg()?)?;

    let pts: Vec<_> = rows.iter().map(|r| (r.thickness, r.power, r.power_err)).collect();
    match window_fit(&pts, f64::NEG_INFINITY, f64::INFINITY)? {
        Some(fit) => {
            ctx.write_file("gamma_fit.csv", &data::write_fit(&fit))?;
            ctx.print(&fit_line("power", &fit))
        }
        None => ctx.print("single thickness: no fit\n"),
    }
}

fn muon_scan(ctx: &mut Ctx, args: &MuonArgs) -> Result<()> {
    let table = ctx.depth_table(args.depth_table.as_deref())?;
    let det = args.detector.spec()?;
    let cfg = ctx.sensitivity_config(args)?;
    let depths = depths_or_table(args, &table)?;
    let rows = depths
        .iter()
        .map(|&d| muon_power_with(&det, d, &table, &cfg.params, &cfg.muon))
        .collect::<Result<Vec<_>>>()?;
    ctx.write_file("muon_scan.csv", &data::write_muon_scan(&rows))?;

    let rate_plot = Plot::new("Muon events vs depth", "depth (km.w.e.)", "events (1/s)")
        .log_y(true)
        .with_series("event rate", rows.iter().map(|r| (r.depth, r.event_rate)).collect());
    ctx.write_file("muon_rate.svg", &rate_plot.to_svg()?)?;
    let power_plot = Plot::new("Muon power vs depth", "depth (km.w.e.)", "power (W)")
        .log_y(true)
        .with_series("power", rows.iter().map(|r| (r.depth, r.power)).collect());
    ctx.write_file("muon_power.svg", &power_plot.to_svg()?)?;

    let rate_pts: Vec<_> = rows.iter().map(|r| (r.depth, r.event_rate, r.event_rate_err)).collect();
    let power_pts: Vec<_> = rows.iter().map(|r| (r.depth, r.power, r.power_err)).collect();
    for (name, pts) in [("rate", rate_pts), ("power", power_pts)] {
        if let Some(fit) = window_fit(&pts, args.fit_min, args.fit_max)? {
            ctx.write_file(&format!("muon_{name}_fit.csv"), &data::write_fit(&fit))?;
            ctx.print(&fit_line(name, &fit))?;
        }
    }
    Ok(())
}

fn sensitivity(ctx: &mut Ctx, args: &MuonArgs, target: Option<f64>) -> Result<()> {
    let table = ctx.depth_table(args.depth_table.as_deref())?;
    let det = args.detector.spec()?;
    let cfg = ctx.sensitivity_config(args)?;
    let depths = depths_or_table(args, &table)?;
    let rows = lambda_depth_scan(&det, &table, &cfg, &depths)?;
    ctx.write_file("sensitivity.csv", &data::write_lambda_scan(&rows))?;
    let plot = Plot::new("Detectable lambda vs depth", "depth (km.w.e.)", "lambda (1/s)")
        .log_y(true)
        .with_series("detectable lambda", rows.iter().map(|r| (r.depth, r.lambda)).collect());
    ctx.write_file("sensitivity.svg", &plot.to_svg()?)?;
    let pts: Vec<_> = rows.iter().map(|r| (r.depth, r.lambda, r.lambda_err)).collect();
    if let Some(fit) = window_fit(&pts, args.fit_min, args.fit_max)? {
        ctx.write_file("sensitivity_fit.csv", &data::write_fit(&fit))?;
        ctx.print(&fit_line("lambda", &fit))?;
    }
    if let Some(target) = target {
        let depth = depth_for_lambda(target, &det, &table, &cfg)?;
        let csv = format!(
            "target_lambda_per_s,margin_factor,depth_kmwe\n{},{},{}\n",
            fmt_e6(target),
            fmt_e6(cfg.margin_factor),
            fmt_e6(depth)
        );
        ctx.write_file("depth_for_lambda.csv", &csv)?;
        ctx.print(&format!("depth for lambda {}: {depth:.3} km.w.e.\n", fmt_e6(target)))?;
    }
    Ok(())
}

fn exclusion(ctx: &mut Ctx, args: &MuonArgs, at: &[f64], rc_min: f64, rc_max: f64, points: usize) -> Result<()> {
    if at.is_empty() {
        return Err(Error::param("no depths given"));
    }
    if !(rc_min > 0.0) || !(rc_max > rc_min) || points < 2 {
        return Err(Error::param("need 0 < --rc-min < --rc-max and --points >= 2"));
    }
    let table = ctx.depth_table(args.depth_table.as_deref())?;
    let det = args.detector.spec()?;
    let cfg = ctx.sensitivity_config(args)?;
    let grid = log_grid(rc_min, rc_max, points);
    let mut plot = Plot::new("Detectable lambda vs r_c", "r_c (m)", "lambda (1/s)")
        .log_x(true)
        .log_y(true);
    for &depth in at {
        let contour = exclusion_contour(&det, &table, &cfg, depth, &grid)?;
        ctx.write_file(&format!("exclusion_{depth}kmwe.csv"), &data::write_contour(&contour))?;
        plot = plot.with_series(&format!("{depth} km.w.e."), contour.points);
    }
    ctx.write_file("exclusion.svg", &plot.to_svg()?)?;
    Ok(())
}

struct BolometerArgs {
    preset: Preset,
    duration: f64,
    dt: f64,
    rate: f64,
    energy: Option<f64>,
    depth: f64,
    lambda: f64,
    rc: f64,
    noise: bool,
    threshold: Option<f64>,
}

/// Mean muon energy deposit (MeV) crossing the absorber at `depth`.
fn mean_muon_deposit(det: &DetectorSpec, depth: f64, profile: ConstantProfile) -> Result<f64> {
    let consts = crate::constants::Constants::for_profile(profile);
    let energy = mean_muon_energy(depth, &MeanEnergyParams::default());
    let state = MuonState::from_kinetic(energy * 1e3, consts)?;
    Ok(stopping_power(&state, &det.material, consts)? * det.material.density * det.side)
}

fn bolometer(ctx: &mut Ctx, args: &BolometerArgs) -> Result<()> {
    let params = check_csl_args(args.lambda, args.rc)?;
    let det = args.preset.detector();
    let thermal = args.preset.thermal();
    let energy = match args.energy {
        Some(e) => e,
        None => mean_muon_deposit(&det, args.depth, ctx.common.constants)?,
    };
    let power = csl_power(&params, det.mass_kg())?;
    let mut cfg = TraceConfig::new(args.duration, args.dt);
    cfg.event_rate = args.rate;
    cfg.event_energy = EventEnergy::Fixed(energy);
    cfg.csl_power = power;
    cfg.rng_seed = ctx.common.seed;
    cfg.include_fluctuation_noise = args.noise;
    let trace = simulate_trace(&thermal, &cfg)?;

    let threshold = args.threshold.unwrap_or_else(|| {
        (10.0 * trace.metadata.noise_sigma)
            .max(0.1 * pulse_peak(&thermal, energy * MEV_TO_J))
            .max(1e-15)
    });
    let sub = subtract_events(&trace, threshold)?;

    ctx.write_file("trace.csv", &data::write_trace(&trace))?;
    ctx.write_file("events.csv", &data::write_events(&trace))?;
    let stride = (trace.len() / 4000).max(1);
    let plot = Plot::new("Bolometer trace", "time (s)", "temperature (K)").with_series(
        "temperature",
        (0..trace.len())
            .step_by(stride)
            .map(|k| (trace.time(k), trace.temperatures[k]))
            .collect(),
    );
    ctx.write_file("trace.svg", &plot.to_svg()?)?;

    let expected = trace.metadata.steady_gradient;
    let rel = if expected > 0.0 {
        (sub.recovered_gradient - expected) / expected
    } else {
        f64::NAN
    };
    let mut report = String::from("quantity,value\n");
    for (q, v) in [
        ("csl_power_W", fmt_e6(power)),
        ("event_energy_MeV", fmt_e6(energy)),
        ("expected_gradient_K", fmt_e6(expected)),
        ("recovered_gradient_K", fmt_e6(sub.recovered_gradient)),
        ("relative_error", fmt_e6(rel)),
        ("events", trace.events.len().to_string()),
        ("pulses_found", sub.pulses.len().to_string()),
        ("time_constant_s", fmt_e6(trace.metadata.time_constant)),
        ("noise_sigma_K", fmt_e6(trace.metadata.noise_sigma)),
    ] {
        report.push_str(&format!("{q},{v}\n"));
    }
    if trace.metadata.undersampled {
        eprintln!("warning: sample interval exceeds half the time constant; pulses are undersampled");
    }
    ctx.write_file("bolometer_report.csv", &report)?;
    ctx.print(&report)
}

fn column(headers: &csv::StringRecord, name: &str, src: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::param(format!("{src}: no column `{name}`")))
}

#[allow(clippy::too_many_arguments)]
fn fit(
    ctx: &mut Ctx,
    input: &Path,
    x: &str,
    y: &str,
    err: Option<&str>,
    log: bool,
    x_min: Option<f64>,
    x_max: Option<f64>,
) -> Result<()> {
    let src = input.display().to_string();
    let text = std::fs::read_to_string(input).map_err(|err| Error::Io {
        path: input.to_path_buf(),
        err,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse {
            source_name: src.clone(),
            line: 1,
            msg: e.to_string(),
        })?
        .clone();
    let (ix, iy) = (column(&headers, x, &src)?, column(&headers, y, &src)?);
    let ie = err.map(|e| column(&headers, e, &src)).transpose()?;
    let mut pts = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            source_name: src.clone(),
            line: e.position().map_or(0, |p| p.line()),
            msg: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let num = |i: usize| -> Result<f64> {
            record.get(i).and_then(|f| f.parse::<f64>().ok()).ok_or_else(|| Error::Parse {
                source_name: src.clone(),
                line,
                msg: format!("column {}: not a number", i + 1),
            })
        };
        let (xv, yv) = (num(ix)?, num(iy)?);
        let ev = ie.map(num).transpose()?.unwrap_or(0.0);
        if x_min.is_some_and(|m| xv < m) || x_max.is_some_and(|m| xv > m) {
            continue;
        }
        pts.push((xv, yv, ev));
    }
    let result = if log {
        weighted_log_linear_fit(&pts)?
    } else {
        weighted_linear_fit(&pts)?
    };
    ctx.write_file("fit.csv", &data::write_fit(&result))?;
    ctx.print(&data::write_fit(&result))
}
