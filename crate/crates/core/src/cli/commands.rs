//! Subcommand implementations: parameter grids, CSV rows and plot scripts.

use super::{usage, Artifacts, CliError, CliResult, Command, ExperimentSpec, Settings, Units};
use crate::bounds::{self, KOptSearch, NormalizedLower};
use crate::channel_params::{db_to_linear, derive, linear_to_db, ChannelConfig, DerivedParams};
use crate::distortion::{self, distortion_bounds, sdr_pure_k};
use crate::level_crossing::{
    disturbance_acf, gauss_check, mean_excursion_duration, transition_crossings, AcfModel, DistortionSide,
    VarianceOptions,
};
use crate::sim::{self, SimOptions};
use crate::spectrum::{psd_bounds, write_psd_csv, PsdRow};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{LN_2, PI};
use std::fs::File;
use std::io::BufWriter;

pub(super) fn dispatch(spec: &ExperimentSpec, s: &mut Settings, out: &mut Artifacts) -> CliResult<()> {
    match spec.command {
        Command::BoundsSweep => bounds_sweep(spec, s, out),
        Command::KOpt => k_opt(spec, s, out),
        Command::SpectralEfficiency => spectral_efficiency(spec, s, out),
        Command::Psd => psd(spec, s, out),
        Command::TransitionCensus => transition_census(spec, s, out),
        Command::GaussCheck => gauss(spec, s, out),
        Command::Excursion => excursion(spec, s, out),
        Command::LpDistortion => lp_distortion(spec, s, out),
        Command::Deletions => deletions(spec, s, out),
        Command::Simulate => simulate(spec, s, out),
        Command::Constants => constants(spec, s, out),
    }
}

fn bits(nats: f64) -> f64 {
    nats / LN_2
}

fn point(k: f64, w: f64, rho_db: f64, p_hat: f64) -> CliResult<DerivedParams> {
    let ctx = format!("parameters k={k}, W={w}, rho={rho_db} dB");
    let mut cfg = ChannelConfig::from_k(k, w, rho_db).map_err(|e| CliError::at(&ctx, e))?;
    cfg.p_hat = p_hat;
    derive(&cfg).map_err(|e| CliError::at(&ctx, e))
}

fn side(s: &mut Settings) -> CliResult<DistortionSide> {
    match s.raw("side").as_deref() {
        None | Some("upper") => Ok(DistortionSide::Upper),
        Some("lower") => Ok(DistortionSide::Lower),
        Some(v) => Err(usage(format!("`side` must be `upper` or `lower`, got `{v}`"))),
    }
}

fn side_name(side: DistortionSide) -> &'static str {
    match side {
        DistortionSide::Upper => "upper",
        DistortionSide::Lower => "lower",
    }
}

fn fmt_k(k: f64) -> String {
    format!("{k}")
}

fn plot_header(title: &str, xlabel: &str, ylabel: &str) -> String {
    format!(
        "set datafile separator ','\nset title '{title}'\nset xlabel '{xlabel}'\nset ylabel '{ylabel}'\nset grid\nset key outside right\n"
    )
}

#[derive(Serialize)]
struct BoundsRow {
    #[serde(rename = "W")]
    w: f64,
    lambda: f64,
    k: f64,
    #[serde(rename = "rho_dB")]
    rho_db: f64,
    lower_bits_s: f64,
    upper_bits_s: f64,
    awgn_bits_s: f64,
    mu_bar: f64,
    nu: f64,
    #[serde(rename = "sigma_S_sq")]
    sigma_s_sq: f64,
    clamped_flag: bool,
    lower_nats_s: f64,
    upper_nats_s: f64,
    awgn_nats_s: f64,
    lower_raw_nats_s: f64,
    genie_lower_nats_s: f64,
    lower_over_lambda_nats: f64,
    upper_over_lambda_nats: f64,
    sandwich_ok: bool,
}

fn bounds_sweep(spec: &ExperimentSpec, s: &mut Settings, out: &mut Artifacts) -> CliResult<()> {
    let ks = s.log_range("k", 0.1, 5.0, 40)?;
    let rhos = s.list("rho_dB", &[10.0, 20.0, 30.0])?;
    let w = s.f64("W", 1.0)?;
    let p_hat = s.f64("P_hat", 1.0)?;
    s.finish()?;
    let mut pts = Vec::new();
    for &r in &rhos {
        for &k in &ks {
            pts.push(point(k, w, r, p_hat)?);
        }
    }
    let reports = bounds::sweep(&pts);
    let mut rows = Vec::with_capacity(pts.len());
    let mut violations = 0;
    for (p, rep) in pts.iter().zip(reports) {
        let rep = rep.map_err(|e| {
            CliError::at(format!("bound_report at k={}, rho={} dB", p.k, linear_to_db(p.rho)), e)
        })?;
        let ok = rep.lower_rate <= rep.upper_rate && rep.lower_rate <= rep.awgn * (1.0 + 1e-12);
        violations += usize::from(!ok);
        rows.push(BoundsRow {
            w: rep.w,
            lambda: rep.lambda,
            k: rep.k,
            rho_db: linear_to_db(rep.rho),
            lower_bits_s: bits(rep.lower_rate),
            upper_bits_s: bits(rep.upper_rate),
            awgn_bits_s: bits(rep.awgn),
            mu_bar: rep.mu_bar,
            nu: rep.nu,
            sigma_s_sq: rep.sigma_s_sq,
            clamped_flag: rep.clamped,
            lower_nats_s: rep.lower_rate,
            upper_nats_s: rep.upper_rate,
            awgn_nats_s: rep.awgn,
            lower_raw_nats_s: rep.lower_raw,
            genie_lower_nats_s: rep.genie_lower,
            lower_over_lambda_nats: rep.lower_rate / rep.lambda,
            upper_over_lambda_nats: rep.upper_rate / rep.lambda,
            sandwich_ok: ok,
        });
    }
    out.csv("bounds_sweep.csv", &rows)?;
    let mut gp = plot_header("Rate bounds normalized by lambda", "k = W/lambda", "rate / lambda [nat]");
    gp += "set logscale x\n";
    let list: Vec<String> = rhos.iter().map(|r| format!("{r}")).collect();
    gp += &format!(
        "plot for [r in \"{l}\"] 'bounds_sweep.csv' using 3:($4==real(r) ? $17 : 1/0) with lines title 'lower '.r.' dB', \\\n     for [r in \"{l}\"] 'bounds_sweep.csv' using 3:($4==real(r) ? $18 : 1/0) with lines dashtype 2 title 'upper '.r.' dB'\n",
        l = list.join(" ")
    );
    out.text("bounds_sweep.gp", &gp)?;
    println!("bounds-sweep: {} points, {} sandwich violations", rows.len(), violations);
    for r in &rhos {
        let best = rows.iter().filter(|x| x.rho_db == *r).map(|x| x.lower_nats_s).fold(0.0, f64::max);
        println!(
            "  rho = {r} dB: max lower bound {:.6} {}",
            spec.units.convert(best),
            spec.units.rate_label()
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct KOptRow {
    #[serde(rename = "rho_dB")]
    rho_db: f64,
    k_opt: f64,
    delta_nats: f64,
    delta_bits: f64,
    capacity_ratio: f64,
}

fn k_opt(spec: &ExperimentSpec, s: &mut Settings, out: &mut Artifacts) -> CliResult<()> {
    let rhos = s.step_range("rho", 6.0, 40.0, 1.0)?;
    let search = KOptSearch {
        lo: s.f64("k_lo", KOptSearch::default().lo)?,
        hi: s.f64("k_hi", KOptSearch::default().hi)?,
        tol: s.f64("tol", KOptSearch::default().tol)?,
        scan_points: s.usize("scan_points", KOptSearch::default().scan_points)?,
    };
    s.finish()?;
    let rows: Vec<KOptRow> = rhos
        .par_iter()
        .map(|&r| {
            let (k, d) = bounds::k_opt(db_to_linear(r), &search)
                .map_err(|e| CliError::at(format!("k_opt at rho={r} dB"), e))?;
            Ok(KOptRow { rho_db: r, k_opt: k, delta_nats: d, delta_bits: bits(d), capacity_ratio: d.exp() })
        })
        .collect::<CliResult<_>>()?;
    out.csv("k_opt.csv", &rows)?;
    let mut gp = plot_header("Optimal k and capacity ratio", "SNR [dB]", "k_opt");
    gp += "set y2label 'C_AWGN / lower'\nset y2tics\nplot 'k_opt.csv' using 1:2 with lines title 'k_opt', '' using 1:5 axes x1y2 with lines title 'C/I'\n";
    out.text("k_opt.gp", &gp)?;
    let last = rows.last().unwrap();
    println!(
        "k-opt: {} SNR points; at {} dB k_opt = {:.4}, gap {:.6} {}",
        rows.len(),
        last.rho_db,
        last.k_opt,
        spec.units.convert(last.delta_nats),
        match spec.units {
            Units::Bits => "bit",
            Units::Nats => "nat",
        }
    );
    Ok(())
}

#[derive(Serialize)]
struct EfficiencyRow {
    #[serde(rename = "rho_dB")]
    rho_db: f64,
    k: f64,
    lower_bits_s_hz: f64,
    upper_bits_s_hz: f64,
    awgn_bits_s_hz: f64,
    lower_nats_s_hz: f64,
    upper_nats_s_hz: f64,
    awgn_nats_s_hz: f64,
}

#[derive(Serialize)]
struct MarkerRow {
    k: f64,
    /// SNR at which rho equals the lower SDR bound.
    #[serde(rename = "rho_dB")]
    rho_db: f64,
    lower_bits_s_hz: f64,
    upper_bits_s_hz: f64,
}

fn efficiency(k: f64, rho: f64) -> CliResult<(f64, f64)> {
    let lo = NormalizedLower::new(k, rho).value / (2.0 * k);
    let up = bounds::upper_normalized(k, rho)
        .map_err(|e| CliError::at(format!("upper bound at k={k}, rho={} dB", linear_to_db(rho)), e))?
        / (2.0 * k);
    Ok((lo, up))
}

fn spectral_efficiency(spec: &ExperimentSpec, s: &mut Settings, out: &mut Artifacts) -> CliResult<()> {
    let rhos = s.step_range("rho", 0.0, 40.0, 1.0)?;
    let ks = s.list("k", &[0.25, 0.5, 1.0, 2.0, 4.0])?;
    s.finish()?;
    if ks.iter().any(|&k| !(k > 0.0)) {
        return Err(usage("`k` values must be > 0"));
    }
    let mut rows = Vec::new();
    let mut markers = Vec::new();
    for &k in &ks {
        for &r in &rhos {
            let rho = db_to_linear(r);
            let (lo, up) = efficiency(k, rho)?;
            let awgn = 0.5 * rho.ln_1p();
            rows.push(EfficiencyRow {
                rho_db: r,
                k,
                lower_bits_s_hz: bits(lo),
                upper_bits_s_hz: bits(up),
                awgn_bits_s_hz: bits(awgn),
                lower_nats_s_hz: lo,
                upper_nats_s_hz: up,
                awgn_nats_s_hz: awgn,
            });
        }
        let star = sdr_pure_k(k).0;
        let (lo, up) = efficiency(k, star)?;
        markers.push(MarkerRow {
            k,
            rho_db: linear_to_db(star),
            lower_bits_s_hz: bits(lo),
            upper_bits_s_hz: bits(up),
        });
    }
    out.csv("spectral_efficiency.csv", &rows)?;
    out.csv("spectral_efficiency_markers.csv", &markers)?;
    let list: Vec<String> = ks.iter().map(|k| fmt_k(*k)).collect();
    let mut gp = plot_header("Bounds normalized by 2W", "SNR [dB]", "bit/s/Hz");
    gp += &format!(
        "plot for [k in \"{l}\"] 'spectral_efficiency.csv' using 1:($2==real(k) ? $3 : 1/0) with lines title 'lower k='.k, \\\n     for [k in \"{l}\"] 'spectral_efficiency.csv' using 1:($2==real(k) ? $4 : 1/0) with lines dashtype 2 title 'upper k='.k, \\\n     'spectral_efficiency_markers.csv' using 2:3 with points pointtype 3 title 'rho = SDR', \\\n     'spectral_efficiency.csv' using 1:($2=={k0} ? $5 : 1/0) with lines lc 'black' title 'AWGN'\n",
        l = list.join(" "),
        k0 = list[0]
    );
    out.text("spectral_efficiency.gp", &gp)?;
    println!("spectral-efficiency: {} rows over {} values of k", rows.len(), ks.len());
    for m in &markers {
        let v = match spec.units {
            Units::Bits => m.lower_bits_s_hz,
            Units::Nats => m.lower_bits_s_hz * LN_2,
        };
        println!(
            "  k = {}: saturation marker at {:.2} dB, lower {:.6} {}/Hz",
            m.k,
            m.rho_db,
            v,
            spec.units.rate_label()
        );
    }
    Ok(())
}

fn psd(_spec: &ExperimentSpec, s: &mut Settings, out: &mut Artifacts) -> CliResult<()> {
    let ks = s.list("k", &[0.5, 1.0, 2.0])?;
    let w = s.f64("W", 1.0)?;
    let p_hat = s.f64("P_hat", 1.0)?;
    let k_symbols = s.usize("K", 100_000)?;
    let segment = s.usize("segment_symbols", 1000)?;
    let f_max = s.f64("f_max_over_W", 4.0)?;
    let band = s.usize("band_bins", 64)?;
    let ppb = s.f64("points_per_beta", 20.0)?;
    s.finish()?;
    if band == 0 || !(f_max > 0.0) || ppb < 20.0 {
        return Err(usage("`band_bins` must be >= 1, `f_max_over_W` > 0 and `points_per_beta` >= 20"));
    }
    let mut names = Vec::new();
    for (i, &k) in ks.iter().enumerate() {
        let p = point(k, w, 10.0, p_hat)?;
        let ctx = format!("empirical_psd at k={k}");
        let e = sim::empirical_psd(&p, k_symbols, segment, p.beta / ppb, spec_seed(s, i as u64))
            .map_err(|e| CliError::at(&ctx, e))?;
        let b = psd_bounds(&p);
        let mut rows = Vec::new();
        for chunk in e.omega.iter().zip(&e.psd).collect::<Vec<_>>().chunks(band) {
            let centre = chunk.iter().map(|(w, _)| **w).sum::<f64>() / chunk.len() as f64;
            let f_over_w = centre / (2.0 * PI * p.w);
            if f_over_w > f_max {
                break;
            }
            let (mut lo, mut up, mut emp) = (0.0, 0.0, 0.0);
            for (&om, &v) in chunk {
                let (l, u) = b.at(om).map_err(|e| CliError::at(&ctx, e))?;
                lo += l;
                up += u;
                emp += v;
            }
            let n = chunk.len() as f64;
            rows.push(PsdRow { f_over_w, lower: lo / n, upper: up / n, empirical: emp / n });
        }
        let name = format!("psd_k{}.csv", fmt_k(k));
        let path = out.path(&name);
        let file =
            File::create(&path).map_err(|e| CliError::Numerical(format!("{}: {e}", path.display())))?;
        write_psd_csv(BufWriter::new(file), &rows).map_err(|e| CliError::at(&name, e))?;
        println!(
            "psd: k = {k}: {} bands, {} crossings, power ratio {:.4}",
            rows.len(),
            e.n_crossings,
            e.total_power / p.p
        );
        names.push(name);
    }
    let mut gp = plot_header("PSD of the transmit signal", "f / W", "S(2 pi f)");
    gp += "set logscale y\nplot ";
    let parts: Vec<String> = names
        .iter()
        .map(|n| format!("'{n}' using 1:3 with lines title '{n} upper', '{n}' using 1:2 with lines dashtype 2 title '{n} lower', '{n}' using 1:4 with points pointtype 7 pointsize 0.3 title '{n} empirical'"))
        .collect();
    gp += &parts.join(", \\\n     ");
    gp += "\n";
    out.text("psd.gp", &gp)
}

fn spec_seed(s: &mut Settings, offset: u64) -> u64 {
    let base: u64 = s.entries().get("seed").and_then(|v| v.parse().ok()).unwrap_or(1);
    base.wrapping_mul(1_000_003).wrapping_add(offset)
}

#[derive(Serialize)]
struct CensusRow {
    #[serde(rename = "rho_dB")]
    rho_db: f64,
    k: f64,
    #[serde(rename = "E_N")]
    e_n: f64,
    #[serde(rename = "Var_N")]
    var_n: f64,
    #[serde(rename = "E_N_lower_side")]
    e_n_lower: f64,
    #[serde(rename = "Var_N_lower_side")]
    var_n_lower: f64,
    excluded_mass: f64,
    mc_mean: Option<f64>,
    mc_var: Option<f64>,
    mc_std_error: Option<f64>,
    mc_transitions: Option<usize>,
}

fn transition_census(_spec: &ExperimentSpec, s: &mut Settings, out: &mut Artifacts) -> CliResult<()> {
    let rhos = s.list("rho_dB", &[0.0, 3.0, 6.0, 10.0, 15.0, 20.0])?;
    let ks = s.list("k", &[0.5, 1.0, 2.0])?;
    let w = s.f64("W", 1.0)?;
    let n_trials = s.usize("n_trials", 10_000)?;
    let mc = s.bool("mc", true)?;
    let ppb = s.f64("points_per_beta", 40.0)?;
    s.finish()?;
    let opts = SimOptions { points_per_beta: ppb, ..Default::default() };
    let vopts = VarianceOptions::default();
    let mut rows = Vec::new();
    let mut idx = 0;
    for &k in &ks {
        for &r in &rhos {
            let p = point(k, w, r, 1.0)?;
            let ctx = format!("transition crossings at k={k}, rho={r} dB");
            let up =
                transition_crossings(&p, DistortionSide::Upper, &vopts).map_err(|e| CliError::at(&ctx, e))?;
            let lo =
                transition_crossings(&p, DistortionSide::Lower, &vopts).map_err(|e| CliError::at(&ctx, e))?;
            let census = if mc {
                Some(
                    sim::transition_crossing_census(&p, n_trials, &opts, spec_seed(s, idx))
                        .map_err(|e| CliError::at(&ctx, e))?,
                )
            } else {
                None
            };
            idx += 1;
            rows.push(CensusRow {
                rho_db: r,
                k,
                e_n: up.moments.mean,
                var_n: up.moments.variance,
                e_n_lower: lo.moments.mean,
                var_n_lower: lo.moments.variance,
                excluded_mass: up.moments.excluded_mass,
                mc_mean: census.map(|c| c.mean),
                mc_var: census.map(|c| c.variance),
                mc_std_error: census.map(|c| c.std_error()),
                mc_transitions: census.map(|c| c.n),
            });
        }
    }
    out.csv("transition_census.csv", &rows)?;
    let list: Vec<String> = ks.iter().map(|k| fmt_k(*k)).collect();
    let mut gp = plot_header("Zero-crossings per transition interval", "SNR [dB]", "E[N], Var[N]");
    gp += &format!(
        "plot for [k in \"{l}\"] 'transition_census.csv' using 1:($2==real(k) ? $3 : 1/0) with lines title 'E k='.k, \\\n     for [k in \"{l}\"] 'transition_census.csv' using 1:($2==real(k) ? $4 : 1/0) with lines dashtype 2 title 'Var k='.k, \\\n     for [k in \"{l}\"] 'transition_census.csv' using 1:($2==real(k) ? $8 : 1/0) with points title 'MC k='.k\n",
        l = list.join(" ")
    );
    out.text("transition_census.gp", &gp)?;
    println!("transition-census: {} points", rows.len());
    Ok(())
}

#[derive(Serialize)]
struct GaussRow {
    #[serde(rename = "rho_dB")]
    rho_db: f64,
    k: f64,
    sigma_ratio: f64,
    variance_ratio: f64,
    #[serde(rename = "sigma_S_sq")]
    sigma_s_sq: f64,
    exact_variance: f64,
    side: &'static str,
}

fn gauss(_spec: &ExperimentSpec, s: &mut Settings, out: &mut Artifacts) -> CliResult<()> {
    let rhos = s.step_range("rho", -5.0, 30.0, 1.0)?;
    let ks = s.list("k", &[0.5, 1.0, 2.0])?;
    let w = s.f64("W", 1.0)?;
    let side = side(s)?;
    s.finish()?;
    let mut pts = Vec::new();
    for &k in &ks {
        for &r in &rhos {
            pts.push((k, r, point(k, w, r, 1.0)?));
        }
    }
    let rows: Vec<GaussRow> = pts
        .par_iter()
        .map(|(k, r, p)| {
            let g = gauss_check(p, side)
                .map_err(|e| CliError::at(format!("gauss_check at k={k}, rho={r} dB"), e))?;
            Ok(GaussRow {
                rho_db: *r,
                k: *k,
                sigma_ratio: g.sigma_ratio,
                variance_ratio: g.variance_ratio,
                sigma_s_sq: g.sigma_s_sq,
                exact_variance: g.exact_variance,
                side: side_name(side),
            })
        })
        .collect::<CliResult<_>>()?;
    out.csv("gauss_check.csv", &rows)?;
    let list: Vec<String> = ks.iter().map(|k| fmt_k(*k)).collect();
    let mut gp =
        plot_header("Exact vs Gaussian shift standard deviation", "SNR [dB]", "sigma_S / sigma_S,Gauss");
    gp += &format!(
        "plot for [k in \"{l}\"] 'gauss_check.csv' using 1:($2==real(k) ? $3 : 1/0) with lines title 'k='.k\n",
        l = list.join(" ")
    );
    out.text("gauss_check.gp", &gp)?;
    println!("gauss-check: {} points ({} side)", rows.len(), side_name(side));
    Ok(())
}

#[derive(Serialize)]
struct ExcursionRow {
    #[serde(rename = "rho_dB")]
    rho_db: f64,
    k: f64,
    tau_over_beta: f64,
    tau_s: f64,
    noise_only_tau_over_beta: f64,
    mc_tau_over_beta: Option<f64>,
    mc_std_error_over_beta: Option<f64>,
    mc_excursions: Option<usize>,
}

fn excursion(_spec: &ExperimentSpec, s: &mut Settings, out: &mut Artifacts) -> CliResult<()> {
    let rhos = s.step_range("rho", 0.0, 20.0, 1.0)?;
    let ks = s.list("k", &[0.5, 1.0, 2.0])?;
    let w = s.f64("W", 1.0)?;
    let side = side(s)?;
    let mc_max = s.f64("mc_max_dB", 10.0)?;
    let samples = s.usize("mc_samples", 1 << 22)?;
    let min_exc = s.usize("mc_min_excursions", 20)?;
    s.finish()?;
    let mut rows = Vec::new();
    let mut idx = 0;
    for &k in &ks {
        for &r in &rhos {
            let p = point(k, w, r, 1.0)?;
            let ctx = format!("excursion at k={k}, rho={r} dB");
            let acf = disturbance_acf(&p, side);
            let tau = mean_excursion_duration(p.p_hat, acf.s0(), acf.s2_zero())
                .map_err(|e| CliError::at(&ctx, e))?;
            let sn = p.n0 * p.w;
            let noise_tau = mean_excursion_duration(p.p_hat, sn, distortion::noise_curvature(p.n0, p.w))
                .map_err(|e| CliError::at(&ctx, e))?;
            let mut mc = None;
            if r <= mc_max {
                let e = sim::excursion_mc(
                    p.p_hat.sqrt(),
                    p.w,
                    p.n0,
                    samples,
                    1.0 / (40.0 * p.w),
                    spec_seed(s, idx),
                );
                match e {
                    Ok(e) if e.n_excursions >= min_exc => mc = Some(e),
                    Ok(_) | Err(crate::error::Error::Domain(_)) => {}
                    Err(e) => return Err(CliError::at(&ctx, e)),
                }
            }
            idx += 1;
            rows.push(ExcursionRow {
                rho_db: r,
                k,
                tau_over_beta: tau / p.beta,
                tau_s: tau,
                noise_only_tau_over_beta: noise_tau / p.beta,
                mc_tau_over_beta: mc.map(|e| e.mean_duration / p.beta),
                mc_std_error_over_beta: mc.map(|e| e.std_error / p.beta),
                mc_excursions: mc.map(|e| e.n_excursions),
            });
        }
    }
    out.csv("excursion.csv", &rows)?;
    let list: Vec<String> = ks.iter().map(|k| fmt_k(*k)).collect();
    let mut gp = plot_header("Mean excursion duration", "SNR [dB]", "tau / beta");
    gp += &format!(
        "set logscale y\nplot for [k in \"{l}\"] 'excursion.csv' using 1:($2==real(k) ? $3 : 1/0) with lines title 'k='.k, \\\n     'excursion.csv' using 1:6 with points title 'MC (noise only)'\n",
        l = list.join(" ")
    );
    out.text("excursion.gp", &gp)?;
    println!("excursion: {} points", rows.len());
    Ok(())
}

#[derive(Serialize)]
struct LpRow {
    k: f64,
    time_mean: f64,
    time_variance: f64,
    ensemble_variance_t1: f64,
    ensemble_variance_t2: f64,
    ensemble_variance_t3: f64,
    ensemble_variance_pooled: f64,
    sigma_xt_sq_lo: f64,
    sigma_xt_sq_hi: f64,
    kl_nats: f64,
    kl_bits: f64,
    in_bounds: bool,
    n_time_samples: usize,
    n_ensemble: usize,
}

#[derive(Serialize)]
struct HistRow {
    x: f64,
    density: f64,
    gaussian: f64,
}

fn lp_distortion(_spec: &ExperimentSpec, s: &mut Settings, out: &mut Artifacts) -> CliResult<()> {
    let ks = s.list("k", &[0.5, 1.0, 2.0, 4.0])?;
    let w = s.f64("W", 1.0)?;
    let n_time = s.usize("n_time_samples", 1_000_000)?;
    let n_ens = s.usize("n_ensemble", 10_000)?;
    s.finish()?;
    let mut rows = Vec::new();
    for (i, &k) in ks.iter().enumerate() {
        let p = point(k, w, 10.0, 1.0)?;
        let ctx = format!("lp_distortion_stats at k={k}");
        let d = distortion_bounds(&p).map_err(|e| CliError::at(&ctx, e))?;
        let st = sim::lp_distortion_stats(&p, n_time, n_ens, spec_seed(s, i as u64))
            .map_err(|e| CliError::at(&ctx, e))?;
        let sd = st.time_variance.sqrt();
        let hist: Vec<HistRow> = st
            .histogram
            .centers
            .iter()
            .zip(&st.histogram.density)
            .map(|(&x, &dens)| HistRow {
                x,
                density: dens,
                gaussian: crate::special::std_normal_pdf((x - st.time_mean) / sd) / sd,
            })
            .collect();
        out.csv(&format!("lp_hist_k{}.csv", fmt_k(k)), &hist)?;
        rows.push(LpRow {
            k,
            time_mean: st.time_mean,
            time_variance: st.time_variance,
            ensemble_variance_t1: st.ensemble_variance[0],
            ensemble_variance_t2: st.ensemble_variance[1],
            ensemble_variance_t3: st.ensemble_variance[2],
            ensemble_variance_pooled: st.ensemble_variance_pooled,
            sigma_xt_sq_lo: d.sigma_xt_sq_lo,
            sigma_xt_sq_hi: d.sigma_xt_sq_hi,
            kl_nats: st.kl_divergence,
            kl_bits: bits(st.kl_divergence),
            in_bounds: st.time_variance >= d.sigma_xt_sq_lo && st.time_variance <= d.sigma_xt_sq_hi,
            n_time_samples: st.n_time_samples,
            n_ensemble: st.n_ensemble,
        });
        println!(
            "lp-distortion: k = {k}: variance {:.6} in [{:.6}, {:.6}], KL {:.5} nat",
            st.time_variance, d.sigma_xt_sq_lo, d.sigma_xt_sq_hi, st.kl_divergence
        );
    }
    out.csv("lp_distortion.csv", &rows)?;
    let mut gp = plot_header("Lowpass distortion histogram", "x", "density");
    gp += "set logscale y\nplot ";
    let parts: Vec<String> = ks
        .iter()
        .map(|k| {
            let n = format!("lp_hist_k{}.csv", fmt_k(*k));
            format!("'{n}' using 1:2 with steps title 'k={k}', '{n}' using 1:3 with lines dashtype 2 title 'Gauss k={k}'")
        })
        .collect();
    gp += &parts.join(", \\\n     ");
    gp += "\n";
    out.text("lp_distortion.gp", &gp)
}

#[derive(Serialize)]
struct DeletionRow {
    #[serde(rename = "W")]
    w: f64,
    beta: f64,
    two_w_beta: f64,
    k_tilde: f64,
    #[serde(rename = "rho_dB")]
    rho_db: f64,
    n_symbols: usize,
    n_deletions: usize,
    n_insertions: usize,
}

fn deletions(_spec: &ExperimentSpec, s: &mut Settings, out: &mut Artifacts) -> CliResult<()> {
    let betas = s.list("beta", &[0.02, 0.05, 0.1, 0.2, 0.5])?;
    let ratios = s.list("two_w_beta", &[0.1, 0.2, 0.3, 0.5, 0.8, 1.0, 1.5, 2.0])?;
    let rhos = s.list("rho_dB", &[6.0, 15.0])?;
    let lambda = s.f64("lambda", 1.0)?;
    let n_symbols = s.usize("K", 1000)?;
    let dt = s.f64("dt", 1e-3)?;
    s.finish()?;
    let mut jobs = Vec::new();
    for &r in &rhos {
        for &b in &betas {
            for &f in &ratios {
                jobs.push((r, b, f));
            }
        }
    }
    let base = spec_seed(s, 0);
    let rows: Vec<DeletionRow> = jobs
        .par_iter()
        .enumerate()
        .map(|(i, &(r, b, f))| {
            let w = f / (2.0 * b);
            let ctx = format!("deletion census at W={w}, beta={b}, rho={r} dB");
            let d = sim::deletion_census(w, b, lambda, r, n_symbols, dt, base.wrapping_add(i as u64))
                .map_err(|e| CliError::at(&ctx, e))?;
            Ok(DeletionRow {
                w,
                beta: b,
                two_w_beta: f,
                k_tilde: d.k_tilde,
                rho_db: r,
                n_symbols: d.n_symbols,
                n_deletions: d.n_deletions,
                n_insertions: d.n_insertions,
            })
        })
        .collect::<CliResult<_>>()?;
    out.csv("deletions.csv", &rows)?;
    let list: Vec<String> = rhos.iter().map(|r| format!("{r}")).collect();
    let mut gp = plot_header("Deletions with decoupled W and beta", "2 W beta", "deletions per symbol");
    gp += &format!(
        "set logscale x\nset arrow from 1, graph 0 to 1, graph 1 nohead dashtype 3\nplot for [r in \"{l}\"] 'deletions.csv' using 3:($5==real(r) ? $7/$6 : 1/0) with points title ''.r.' dB'\n",
        l = list.join(" ")
    );
    out.text("deletions.gp", &gp)?;
    let above: usize = rows.iter().filter(|r| r.two_w_beta >= 1.0).map(|r| r.n_deletions).sum();
    println!("deletions: {} points; {} deletions in total where 2 W beta >= 1", rows.len(), above);
    Ok(())
}

#[derive(Serialize)]
struct SimulateRow {
    #[serde(rename = "W")]
    w: f64,
    lambda: f64,
    k: f64,
    #[serde(rename = "rho_dB")]
    rho_db: f64,
    n_symbols: usize,
    shift_mean: f64,
    shift_variance: f64,
    #[serde(rename = "sigma_S_sq_hi_s2")]
    sigma_s_sq_time_hi: f64,
    #[serde(rename = "sigma_S_sq_lo_s2")]
    sigma_s_sq_time_lo: f64,
    mean_v: f64,
    mu_bar: f64,
    n_insertions: usize,
    n_deletions: usize,
    noise_zc_rate: f64,
    noise_zc_expected: f64,
}

fn simulate(_spec: &ExperimentSpec, s: &mut Settings, out: &mut Artifacts) -> CliResult<()> {
    let cfg = s.channel()?;
    let n_symbols = s.usize("n_symbols", 10_000)?;
    let ppb = s.f64("points_per_beta", 40.0)?;
    let block = s.usize("block_symbols", 1000)?;
    let noise = s.bool("noise", true)?;
    let dump = s.bool("dump", false)?;
    let noise_samples = s.usize("noise_samples", 10_000_000)?;
    s.finish()?;
    let p = derive(&cfg).map_err(|e| CliError::at("channel", e))?;
    let opts = SimOptions { points_per_beta: ppb, block_symbols: block, noise };
    let seed = spec_seed(s, 0);
    let ctx = format!("simulate at k={}, rho={} dB", p.k, linear_to_db(p.rho));
    let c = sim::chain_experiment(&p, n_symbols, &opts, seed).map_err(|e| CliError::at(&ctx, e))?;
    let d = distortion_bounds(&p).map_err(|e| CliError::at(&ctx, e))?;
    let lb = bounds::lower_bound_rate(&p).map_err(|e| CliError::at(&ctx, e))?;
    let to_time = p.beta * p.beta / (PI * PI * p.p_hat);
    let nz = sim::noise_crossing_rate(p.w, p.n0, noise_samples, 1.0 / (20.0 * p.w), seed.wrapping_add(1))
        .map_err(|e| CliError::at(&ctx, e))?;
    let row = SimulateRow {
        w: p.w,
        lambda: p.lambda,
        k: p.k,
        rho_db: linear_to_db(p.rho),
        n_symbols: c.n_symbols,
        shift_mean: c.shift_mean,
        shift_variance: c.shift_variance,
        sigma_s_sq_time_hi: d.sigma_z_sq_hi * to_time,
        sigma_s_sq_time_lo: d.sigma_z_sq_lo * to_time,
        mean_v: c.mean_v,
        mu_bar: lb.mu_bar,
        n_insertions: c.n_insertions,
        n_deletions: c.n_deletions,
        noise_zc_rate: nz.rate,
        noise_zc_expected: nz.expected,
    };
    out.csv("simulate.csv", &[row])?;
    if dump {
        let b = sim::chain_block(&p, block.max(2) & !1, &opts, seed, 0).map_err(|e| CliError::at(&ctx, e))?;
        for (name, seq) in [("tx_crossings.bin", &b.tx), ("rx_crossings.bin", &b.rx)] {
            let path = out.path(name);
            let f =
                File::create(&path).map_err(|e| CliError::Numerical(format!("{}: {e}", path.display())))?;
            sim::write_crossing_dump(BufWriter::new(f), seq).map_err(|e| CliError::at(name, e))?;
        }
    }
    println!(
        "simulate: {} symbols, shift variance {:.4e} s^2 (model {:.4e}..{:.4e}), mean V {:.4} <= mu_bar {:.4}, {} insertions, {} deletions",
        c.n_symbols,
        c.shift_variance,
        d.sigma_z_sq_lo * to_time,
        d.sigma_z_sq_hi * to_time,
        c.mean_v,
        lb.mu_bar,
        c.n_insertions,
        c.n_deletions
    );
    println!("  noise zero-crossing rate {:.6} /s (expected {:.6})", nz.rate, nz.expected);
    Ok(())
}

#[derive(Serialize)]
struct ConstantRow {
    name: &'static str,
    value: f64,
    oracle: f64,
    relative_residual: f64,
}

fn constants(_spec: &ExperimentSpec, s: &mut Settings, out: &mut Artifacts) -> CliResult<()> {
    s.finish()?;
    let c0q = distortion::c0_quadrature().map_err(|e| CliError::at("c0 quadrature", e))?;
    let c2q = distortion::c2_quadrature().map_err(|e| CliError::at("c2 quadrature", e))?;
    let rice = bounds::rice_rate(1.0, distortion::noise_curvature(1.0, 1.0));
    let two_over_sqrt3 = 2.0 / 3f64.sqrt();
    let rows = [
        ("c0", distortion::c0_constant(), c0q),
        ("c2", distortion::c2_constant(), c2q),
        ("2/sqrt(3)", two_over_sqrt3, rice),
    ]
    .map(|(name, value, oracle)| ConstantRow {
        name,
        value,
        oracle,
        relative_residual: (value - oracle).abs() / oracle.abs(),
    });
    out.csv("constants.csv", &rows)?;
    for r in &rows {
        println!(
            "{:<10} {:.12}  oracle {:.12}  residual {:.3e}",
            r.name, r.value, r.oracle, r.relative_residual
        );
    }
    Ok(())
}
