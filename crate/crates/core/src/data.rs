//! CSV ingestion and serialization of input tables and results.
//!
//! Input files are comma separated, UTF-8, with a fixed header line and
//! optional `#` comment lines. Numbers are written with C-style `%.6e`
//! formatting and LF line endings.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fit::FitResult;
use crate::gamma::{AttenuationRow, AttenuationTable, GammaBin, GammaSpectrum, ScanRow};
use crate::muon::{DepthIntensityRow, DepthIntensityTable, MuonPower};
use crate::physics::Material;
use crate::sensitivity::{ExclusionContour, LambdaRow};
use crate::thermal::Trace;

pub const ATTENUATION_HEADER: &str = "energy_MeV,mu_total_cm2_g,mu_en_cm2_g";
pub const SPECTRUM_HEADER: &str = "e_low_MeV,e_high_MeV,flux_cm2_s,flux_err_cm2_s";
pub const DEPTH_HEADER: &str = "depth_kmwe,intensity_cm2_s_sr,intensity_err";
pub const SHIELD_SCAN_HEADER: &str = "thickness_cm,power_W,power_err_W";
pub const MUON_SCAN_HEADER: &str = "depth_kmwe,event_rate_per_s,event_rate_err,power_W,power_err_W";
pub const LAMBDA_SCAN_HEADER: &str = "depth_kmwe,lambda_per_s,lambda_err_per_s";
pub const CONTOUR_HEADER: &str = "r_c_m,lambda_per_s";
pub const FIT_HEADER: &str = "slope,intercept,slope_err,intercept_err,chi2,n";
pub const TRACE_HEADER: &str = "time_s,temperature_K";
pub const EVENT_HEADER: &str = "time_s,energy_MeV";

/// Formats like C's `%.6e` (at least two exponent digits, explicit sign).
pub fn fmt_e6(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{x:.6e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|err| Error::Io {
        path: path.to_path_buf(),
        err,
    })
}

/// Parses numeric CSV rows below an exact header; returns (line, values).
fn parse_numeric(text: &str, source_name: &str, header: &str) -> Result<Vec<(u64, Vec<f64>)>> {
    let expected: Vec<&str> = header.split(',').collect();
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .has_headers(true)
        .from_reader(text.as_bytes());
    let got = reader.headers().map_err(|e| Error::Parse {
        source_name: source_name.to_string(),
        line: e.position().map_or(1, |p| p.line()),
        msg: e.to_string(),
    })?;
    if got.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Parse {
            source_name: source_name.to_string(),
            line: reader.position().line().max(1),
            msg: format!("expected header `{header}`"),
        });
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            source_name: source_name.to_string(),
            line: e.position().map_or(0, |p| p.line()),
            msg: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != expected.len() {
            return Err(Error::Parse {
                source_name: source_name.to_string(),
                line,
                msg: format!("expected {} fields, found {}", expected.len(), record.len()),
            });
        }
        let values = record
            .iter()
            .zip(&expected)
            .map(|(field, col)| {
                field.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Parse {
                    source_name: source_name.to_string(),
                    line,
                    msg: format!("column `{col}`: `{field}` is not a finite number"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push((line, values));
    }
    Ok(rows)
}

fn revalidate<T>(source_name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Validation { rule, .. } => Error::validation(source_name, rule),
        other => other,
    })
}

pub fn parse_attenuation(text: &str, source_name: &str, material: Material) -> Result<AttenuationTable> {
    let rows = parse_numeric(text, source_name, ATTENUATION_HEADER)?
        .into_iter()
        .map(|(_, v)| AttenuationRow {
            energy: v[0],
            mu_total: v[1],
            mu_en: v[2],
        })
        .collect();
    revalidate(source_name, AttenuationTable::new(material, rows))
}

/// Loads a photon coefficient table for `material`.
pub fn load_attenuation(path: &Path, material: Material) -> Result<AttenuationTable> {
    parse_attenuation(&read_text(path)?, &path.display().to_string(), material)
}

pub fn parse_gamma_spectrum(text: &str, source_name: &str) -> Result<GammaSpectrum> {
    let rows = parse_numeric(text, source_name, SPECTRUM_HEADER)?
        .into_iter()
        .map(|(_, v)| GammaBin {
            e_low: v[0],
            e_high: v[1],
            flux: v[2],
            flux_err: v[3],
        })
        .collect();
    revalidate(source_name, GammaSpectrum::new(rows))
}

pub fn load_gamma_spectrum(path: &Path) -> Result<GammaSpectrum> {
    parse_gamma_spectrum(&read_text(path)?, &path.display().to_string())
}

pub fn parse_depth_intensity(text: &str, source_name: &str, site: &str) -> Result<DepthIntensityTable> {
    let rows = parse_numeric(text, source_name, DEPTH_HEADER)?
        .into_iter()
        .map(|(_, v)| DepthIntensityRow {
            depth: v[0],
            intensity: v[1],
            intensity_err: v[2],
        })
        .collect();
    revalidate(source_name, DepthIntensityTable::new(site, rows))
}

pub fn load_depth_intensity(path: &Path, site: &str) -> Result<DepthIntensityTable> {
    parse_depth_intensity(&read_text(path)?, &path.display().to_string(), site)
}

/// Assembles CSV text from a header, optional `#` metadata and rows.
fn render(header: &str, meta: &[(String, String)], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = String::new();
    for (k, v) in meta {
        writeln!(out, "# {k}: {v}").unwrap();
    }
    out.push_str(header);
    out.push('\n');
    for row in rows {
        let fields: Vec<String> = row.into_iter().map(fmt_e6).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn write_attenuation(table: &AttenuationTable) -> String {
    render(
        ATTENUATION_HEADER,
        &[],
        table.rows().iter().map(|r| vec![r.energy, r.mu_total, r.mu_en]),
    )
}

pub fn write_gamma_spectrum(spectrum: &GammaSpectrum) -> String {
    render(
        SPECTRUM_HEADER,
        &[],
        spectrum.bins().iter().map(|b| vec![b.e_low, b.e_high, b.flux, b.flux_err]),
    )
}

pub fn write_depth_intensity(table: &DepthIntensityTable) -> String {
    render(
        DEPTH_HEADER,
        &[],
        table.rows().iter().map(|r| vec![r.depth, r.intensity, r.intensity_err]),
    )
}

pub fn write_shield_scan(rows: &[ScanRow]) -> String {
    render(
        SHIELD_SCAN_HEADER,
        &[],
        rows.iter().map(|r| vec![r.thickness, r.power, r.power_err]),
    )
}

pub fn write_muon_scan(rows: &[MuonPower]) -> String {
    render(
        MUON_SCAN_HEADER,
        &[],
        rows.iter()
            .map(|r| vec![r.depth, r.event_rate, r.event_rate_err, r.power, r.power_err]),
    )
}

pub fn write_lambda_scan(rows: &[LambdaRow]) -> String {
    render(
        LAMBDA_SCAN_HEADER,
        &[],
        rows.iter().map(|r| vec![r.depth, r.lambda, r.lambda_err]),
    )
}

pub fn write_contour(contour: &ExclusionContour) -> String {
    render(
        CONTOUR_HEADER,
        &[
            ("depth_kmwe".into(), fmt_e6(contour.depth)),
            ("margin_factor".into(), fmt_e6(contour.margin_factor)),
        ],
        contour.points.iter().map(|&(r, l)| vec![r, l]),
    )
}

pub fn write_fit(fit: &FitResult) -> String {
    format!(
        "{FIT_HEADER}\n{},{},{},{},{},{}\n",
        fmt_e6(fit.slope),
        fmt_e6(fit.intercept),
        fmt_e6(fit.slope_err),
        fmt_e6(fit.intercept_err),
        fmt_e6(fit.chi2),
        fit.n_points
    )
}

fn trace_meta(trace: &Trace) -> Vec<(String, String)> {
    let m = &trace.metadata;
    vec![
        ("bath_temperature_K".into(), fmt_e6(m.bath_temperature)),
        ("heat_capacity_J_per_K".into(), fmt_e6(m.heat_capacity)),
        ("time_constant_s".into(), fmt_e6(m.time_constant)),
        ("steady_gradient_K".into(), fmt_e6(m.steady_gradient)),
        ("noise_sigma_K".into(), fmt_e6(m.noise_sigma)),
        ("sample_interval_s".into(), fmt_e6(m.sample_interval)),
        ("seed".into(), m.seed.to_string()),
        ("undersampled".into(), m.undersampled.to_string()),
    ]
}

pub fn write_trace(trace: &Trace) -> String {
    render(
        TRACE_HEADER,
        &trace_meta(trace),
        trace
            .temperatures
            .iter()
            .enumerate()
            .map(|(k, &t)| vec![trace.time(k), t]),
    )
}

pub fn write_events(trace: &Trace) -> String {
    render(
        EVENT_HEADER,
        &[("seed".into(), trace.metadata.seed.to_string())],
        trace.events.iter().map(|e| vec![e.time, e.energy]),
    )
}
