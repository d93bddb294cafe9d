use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use odt_stark::beam::AreaQuadrature;
use odt_stark::imaging::{
    estimate_corrected, marginal_widths, power_scan, power_scan_csv, synth_od, to_pgm, OdImage,
};
use odt_stark::numerics::Num;
use odt_stark::stark::{shift_profile, Axis};
use odt_stark::{TrapPotential, CONSTANTS};

use crate::config::{grid, parse_state, parse_states, RunConfig};
use crate::output::Outputs;

pub const ESTIMATE_HEADER: &str =
    "image,N_naive,N_corrected,n0_m3,correction_factor,peak_od,sigma0_m2,inversion,population\n";

pub fn shift(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let catalog = cfg.catalog()?;
    let beam = cfg.beam()?;
    let s = &cfg.shift;
    let axis: Axis = s.axis.parse()?;
    let samples = grid(s.start_m, s.stop_m, s.samples)?;
    let mut states = Vec::new();
    for spec in &s.states {
        states.extend(parse_states(&catalog, spec)?);
    }
    if states.is_empty() {
        bail!("[shift] states is empty");
    }
    let columns = states
        .par_iter()
        .map(|st| shift_profile(&catalog, &beam, st, axis, &samples))
        .collect::<Result<Vec<_>, _>>()?;

    let mut csv = String::from("position_m");
    for st in &states {
        write!(csv, ",shift_Hz[{st}]")?;
    }
    csv.push('\n');
    for (i, pos) in samples.points().enumerate() {
        write!(csv, "{}", Num(pos))?;
        for col in &columns {
            write!(csv, ",{}", Num(col[i].shift_hz))?;
        }
        csv.push('\n');
    }
    out.add("shift.csv", csv);
    Ok(())
}

pub fn potential(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let catalog = cfg.catalog()?;
    let p = &cfg.potential;
    let state = parse_state(&catalog, &p.state)?;
    let trap = TrapPotential::new(&catalog, cfg.beam()?, state)?;
    let xs = grid(p.x_start_m, p.x_stop_m, p.x_samples)?;
    let zs = grid(p.z_start_m, p.z_stop_m, p.z_samples)?;
    let to_mk = 1e3 / CONSTANTS.k_b;
    let rows: Vec<Vec<f64>> = (0..zs.count)
        .into_par_iter()
        .map(|r| {
            let z = zs.point(r);
            xs.points()
                .map(|x| trap.potential(x, 0.0, z) * to_mk)
                .collect()
        })
        .collect();

    let mut csv = String::from("x_m,z_m,U_mK\n");
    for (r, row) in rows.iter().enumerate() {
        for (c, u) in row.iter().enumerate() {
            writeln!(csv, "{},{},{}", Num(xs.point(c)), Num(zs.point(r)), Num(*u))?;
        }
    }
    out.add("potential.csv", csv);
    if p.heatmap {
        let depth: Vec<f64> = rows.iter().flatten().map(|u| -u).collect();
        out.add("potential.pgm", to_pgm(&depth, xs.count, zs.count));
    }
    println!("trap depth: {} mK", Num(trap.trap_depth_mk()));
    Ok(())
}

pub fn sigma_eff(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let catalog = cfg.catalog()?;
    let setup = cfg.imaging_setup(&catalog)?;
    let s = &cfg.sigma_eff;
    let axis: Axis = s.axis.parse()?;
    let samples = grid(s.start_m, s.stop_m, s.samples)?;
    let sigma0 = setup.sigma_unperturbed()?;
    let values = (0..samples.count)
        .into_par_iter()
        .map(|i| {
            let [x, y, z] = axis.point(&setup.beam, samples.point(i));
            setup.sigma_eff(x, y, z)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut csv = String::from("position_m,sigma_eff_m2,sigma_eff_over_sigma0\n");
    for (pos, v) in samples.points().zip(&values) {
        writeln!(csv, "{},{},{}", Num(pos), Num(*v), Num(v / sigma0))?;
    }
    out.add("sigma_eff.csv", csv);
    println!("sigma0: {} m^2", Num(sigma0));
    Ok(())
}

pub fn synth(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let catalog = cfg.catalog()?;
    let setup = cfg.imaging_setup(&catalog)?;
    let cloud = cfg.cloud()?;
    let image = synth_od(&setup, &cloud, &cfg.frame()?)?;
    out.add("od.csv", image.to_csv());
    out.add("od.meta", image.to_meta());
    if cfg.imaging.heatmap {
        out.add("od.pgm", image.to_pgm());
    }
    println!("atoms: {}", Num(cloud.atom_number()));
    println!("max OD: {}", Num(image.max()));
    Ok(())
}

pub fn estimate(cfg: &RunConfig, image_path: &Path, out: &mut Outputs) -> Result<()> {
    let catalog = cfg.catalog()?;
    let setup = cfg.imaging_setup(&catalog)?;
    let image = OdImage::read(image_path)
        .with_context(|| format!("reading image {}", image_path.display()))?;
    let c = &cfg.cloud;
    let (widths, center) = match cfg.imaging.widths_from.as_str() {
        "config" => (
            [c.sigma_x_m, c.sigma_y_m, c.sigma_z_m],
            [c.center_x_m, c.center_y_m, c.center_z_m],
        ),
        "image" => {
            let (sx, sz, cx, cz) = marginal_widths(&image)?;
            ([sx, c.sigma_y_m, sz], [cx, c.center_y_m, cz])
        }
        other => bail!("[imaging] widths_from must be `config` or `image`, got `{other}`"),
    };
    let est = estimate_corrected(&image, &setup, widths, center, &cfg.estimate_options()?)?;
    println!("N_naive: {}", Num(est.n_naive));
    println!("N_corrected: {}", Num(est.n_corrected));
    println!("n0: {} m^-3", Num(est.n0_fitted));
    println!("correction factor: {}", Num(est.correction_factor()));
    let row = format!(
        "{},{},{},{},{},{},{},{},{}\n",
        image_path.display(),
        Num(est.n_naive),
        Num(est.n_corrected),
        Num(est.n0_fitted),
        Num(est.correction_factor()),
        Num(est.peak_od),
        Num(est.sigma0_m2),
        est.method.inversion,
        est.method.population
    );
    out.append(&cfg.imaging.results_csv, ESTIMATE_HEADER, &row)?;
    Ok(())
}

pub fn scan(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let catalog = cfg.catalog()?;
    let setup = cfg.imaging_setup(&catalog)?;
    let rows = power_scan(
        &setup,
        &cfg.cloud()?,
        &cfg.frame()?,
        &cfg.power_scan.powers_w,
        &cfg.estimate_options()?,
    )?;
    out.add("power_scan.csv", power_scan_csv(&rows));
    Ok(())
}

pub fn equipotential(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let catalog = cfg.catalog()?;
    let e = &cfg.equipotential;
    let state = parse_state(&catalog, &cfg.potential.state)?;
    let beam = cfg.beam()?;
    let trap = TrapPotential::new(&catalog, beam.clone(), state)?;
    let level = CONSTANTS.k_b * e.t_mot_k;
    let profile = trap.equipotential_profile(level, e.profile_samples)?;
    let area = trap.equipotential_area(e.t_mot_k)?;

    let mut csv = String::from("x_m,r_m\n");
    for (x, r) in &profile {
        writeln!(csv, "{},{}", Num(*x), Num(*r))?;
    }
    out.add("equipotential_profile.csv", csv);
    println!("area: {} m^2", Num(area));

    if !e.offsets_m.is_empty() {
        let window = e.window_half_m.map(|h| (-h, h));
        let areas = e
            .offsets_m
            .par_iter()
            .map(|&dx| {
                let shifted = trap.with_beam(beam.with_focus(dx)?)?;
                shifted.equipotential_area_level(level, window, AreaQuadrature::default())
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut sweep = String::from("focus_offset_m,area_m2\n");
        for (dx, a) in e.offsets_m.iter().zip(&areas) {
            writeln!(sweep, "{},{}", Num(*dx), Num(*a))?;
        }
        out.add("equipotential_sweep.csv", sweep);
    }
    Ok(())
}
