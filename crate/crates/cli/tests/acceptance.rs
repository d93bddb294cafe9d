//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Run with `cargo test --test acceptance`.

#[path = "../../core/tests/common/wigner_oracle.rs"]
mod wigner_oracle;

use std::path::Path;
use std::process::Command;
use std::sync::Arc;

use odt_stark::absorption::{
    base_cross_sections, polarization_models, population_models, AbsorptionModel, ProbeConfig,
};
use odt_stark::angular::{wigner3j, wigner6j};
use odt_stark::beam::AreaQuadrature;
use odt_stark::imaging::{
    estimate_corrected, power_scan, synth_od, CloudModel, EstimateOptions, Frame, ImagingSetup,
    DEFAULT_QUADRATURE,
};
use odt_stark::stark::{light_shift, shift_per_intensity};
use odt_stark::{BeamGeometry, Catalog, HalfInt, HyperfineState, TrapPotential};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

fn beam(p: f64) -> BeamGeometry {
    BeamGeometry::new(p, 17e-6, 1064e-9, 0.0).unwrap()
}

fn state(term: &str, two_j: i32, f: i32, mf: i32) -> HyperfineState {
    HyperfineState::new(term, HalfInt::from_twice(two_j), HalfInt::int(f))
        .with_mf(HalfInt::int(mf))
        .unwrap()
}

fn setup(power: f64) -> ImagingSetup {
    let cat = Catalog::bundled_rb87();
    let probe = ProbeConfig::rb87_cycling(&cat, polarization_models().create("isotropic").unwrap())
        .unwrap();
    let table = base_cross_sections(&cat, &probe).unwrap();
    let model = AbsorptionModel::new(&cat, &table, &probe, 1064e-9, HalfInt::int(2)).unwrap();
    ImagingSetup {
        model: Arc::new(model),
        beam: beam(power),
        population: population_models().create("uniform").unwrap(),
        quadrature: DEFAULT_QUADRATURE,
    }
}

fn c1_peak_shift() -> Outcome {
    let cat = Catalog::bundled_rb87();
    let s = light_shift(&cat, &beam(1.0), &state("5S1/2", 1, 2, 0), 0.0, 0.0, 0.0)
        .map_err(|e| e.to_string())?
        .shift_hz;
    let err = rel(s, -7.01e6);
    check(
        err <= 0.03,
        format!(
            "shift {:.4} MHz vs -7.01 MHz ({:.2}%, limit 3%)",
            s / 1e6,
            100.0 * err
        ),
    )
}

fn c2_trap_depth() -> Outcome {
    let cat = Catalog::bundled_rb87();
    let g = state("5S1/2", 1, 2, 0);
    let d1 = TrapPotential::new(&cat, beam(1.0), g.clone())
        .unwrap()
        .trap_depth_mk();
    let d25 = TrapPotential::new(&cat, beam(24.9), g)
        .unwrap()
        .trap_depth_mk();
    let (e1, e25) = (rel(d1, 0.336), rel(d25, 8.4));
    check(
        e1 <= 0.03 && e25 <= 0.03,
        format!(
            "1 W: {d1:.4} mK ({:.2}%), 24.9 W: {d25:.3} mK ({:.2}%), limit 3%",
            100.0 * e1,
            100.0 * e25
        ),
    )
}

fn spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::MIN, f64::max);
    let min = values.iter().copied().fold(f64::MAX, f64::min);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    (max - min) / mean.abs()
}

fn c3_mf_degeneracy() -> Outcome {
    let cat = Catalog::bundled_rb87();
    let k = |s: HyperfineState| shift_per_intensity(&cat, 1064e-9, &s).unwrap();
    let f2: Vec<f64> = (-2..=2).map(|m| k(state("5S1/2", 1, 2, m))).collect();
    let f1: Vec<f64> = (-1..=1).map(|m| k(state("5S1/2", 1, 1, m))).collect();
    let e3: Vec<f64> = (-3..=3).map(|m| k(state("5P3/2", 3, 3, m))).collect();
    let (s2, s1, se) = (spread(&f2), spread(&f1), spread(&e3));
    check(
        s2 < 1e-6 && s1 < 1e-6 && se > 1e-3,
        format!("ground spread F=2 {s2:.2e}, F=1 {s1:.2e} (limit 1e-6); excited F'=3 spread {se:.3} (needs > 1e-3)"),
    )
}

fn c4_wigner_oracle() -> Outcome {
    let h = |t: i64| HalfInt::from_twice(t as i32);
    let close = |a: f64, b: f64| {
        if b == 0.0 {
            a == 0.0
        } else {
            (a - b).abs() <= 1e-13 * b.abs()
        }
    };
    let mut n3 = 0usize;
    let mut worst: f64 = 0.0;
    for j1 in 0..=12i64 {
        for j2 in 0..=12i64 {
            for j3 in 0..=12i64 {
                for m1 in (-j1..=j1).step_by(2) {
                    for m2 in (-j2..=j2).step_by(2) {
                        for m3 in (-j3..=j3).step_by(2) {
                            let want = wigner_oracle::three_j(j1, j2, j3, m1, m2, m3).to_f64();
                            let got = wigner3j(h(j1), h(j2), h(j3), h(m1), h(m2), h(m3))
                                .map_err(|e| e.to_string())?;
                            if !close(got, want) {
                                return Err(format!(
                                    "3j ({j1} {j2} {j3}; {m1} {m2} {m3})/2: {got} vs {want}"
                                ));
                            }
                            if want != 0.0 {
                                worst = worst.max(rel(got, want));
                            }
                            n3 += 1;
                        }
                    }
                }
            }
        }
    }
    let mut n6 = 0usize;
    for a in 0..=12i64 {
        for b in 0..=12i64 {
            for c in 0..=12i64 {
                for d in 0..=12i64 {
                    for e in 0..=12i64 {
                        for f in 0..=12i64 {
                            let want = wigner_oracle::six_j(a, b, c, d, e, f).to_f64();
                            let got = wigner6j(h(a), h(b), h(c), h(d), h(e), h(f))
                                .map_err(|e| e.to_string())?;
                            if !close(got, want) {
                                return Err(format!(
                                    "6j {{{a} {b} {c}; {d} {e} {f}}}/2: {got} vs {want}"
                                ));
                            }
                            if want != 0.0 {
                                worst = worst.max(rel(got, want));
                                n6 += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    // 3j orthogonality over the same range.
    let mut orth: f64 = 0.0;
    for j1 in 0..=12i64 {
        for j2 in 0..=12i64 {
            let (lo, hi) = ((j1 - j2).abs(), (j1 + j2).min(12));
            for j3 in (lo..=hi).step_by(2) {
                for j3p in (lo..=hi).step_by(2) {
                    for m3 in (-j3.min(j3p)..=j3.min(j3p)).step_by(2) {
                        let mut sum = 0.0;
                        for m1 in (-j1..=j1).step_by(2) {
                            let m2 = -m1 - m3;
                            if m2.abs() > j2 {
                                continue;
                            }
                            sum += wigner3j(h(j1), h(j2), h(j3), h(m1), h(m2), h(m3)).unwrap()
                                * wigner3j(h(j1), h(j2), h(j3p), h(m1), h(m2), h(m3)).unwrap();
                        }
                        let want = if j3 == j3p { 1.0 } else { 0.0 };
                        orth = orth.max((sum * (j3 + 1) as f64 - want).abs());
                    }
                }
            }
        }
    }
    check(
        orth < 1e-12,
        format!(
            "{n3} 3j arguments and {n6} nonzero 6j symbols (j <= 6) agree, worst rel {worst:.1e} (limit 1e-13); orthogonality error {orth:.1e} (limit 1e-12)"
        ),
    )
}

fn c5_roundtrip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20240917);
    let frame = Frame::centered(41, 21, 4e-6, 0.0, 0.0).unwrap();
    let mut worst: f64 = 0.0;
    for case in 0..20 {
        let power = rng.random_range(0.0..30.0);
        let cloud = CloudModel::new(
            10f64.powf(rng.random_range(17.0..19.0)),
            [
                rng.random_range(20e-6..80e-6),
                rng.random_range(5e-6..15e-6),
                rng.random_range(5e-6..15e-6),
            ],
            [
                rng.random_range(-30e-6..30e-6),
                rng.random_range(-5e-6..5e-6),
                rng.random_range(-5e-6..5e-6),
            ],
        )
        .unwrap();
        let s = setup(power);
        let img = synth_od(&s, &cloud, &frame).map_err(|e| e.to_string())?;
        let est = estimate_corrected(
            &img,
            &s,
            cloud.sigma,
            cloud.center,
            &EstimateOptions::default(),
        )
        .map_err(|e| format!("case {case}: {e}"))?;
        let e = rel(est.n0_fitted, cloud.n0).max(rel(est.n_corrected, cloud.atom_number()));
        if e > 5e-3 {
            return Err(format!("case {case} (P={power:.2} W): error {e:.2e}"));
        }
        worst = worst.max(e);
    }
    check(
        true,
        format!("20 seeded cases, P in [0, 30) W, worst n0/N error {worst:.1e} (limit 5e-3)"),
    )
}

// 5σ coverage in x and z; pitch equal to σz keeps the pixel sum exact to
// well below 1e-6.
fn trend_cloud() -> (CloudModel, Frame) {
    (
        CloudModel::new(1e18, [40e-6, 8e-6, 8e-6], [0.0; 3]).unwrap(),
        Frame::centered(51, 21, 8e-6, 0.0, 0.0).unwrap(),
    )
}

fn c6_zero_power() -> Outcome {
    let (cloud, frame) = trend_cloud();
    let s = setup(0.0);
    let img = synth_od(&s, &cloud, &frame).map_err(|e| e.to_string())?;
    let est = estimate_corrected(
        &img,
        &s,
        cloud.sigma,
        cloud.center,
        &EstimateOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let e = rel(est.n_corrected, est.n_naive);
    check(
        e < 5e-3,
        format!(
            "N_corrected {:.1}, N_naive {:.1}, diff {e:.1e} (limit 5e-3)",
            est.n_corrected, est.n_naive
        ),
    )
}

fn c7_trend() -> Outcome {
    let (cloud, frame) = trend_cloud();
    let opts = EstimateOptions::default();
    let fig3 = power_scan(&setup(0.0), &cloud, &frame, &[19.7, 24.9, 27.7], &opts)
        .map_err(|e| e.to_string())?;
    let ods: Vec<f64> = fig3.iter().map(|r| r.peak_od).collect();
    let decreasing = ods.windows(2).all(|w| w[1] < w[0]);

    // Ratio over the 0-27.7 W operating range; 29 and 30 W are reported only.
    let powers = [
        1.0, 2.5, 5.0, 7.5, 10.0, 12.5, 15.0, 17.5, 19.7, 22.0, 24.9, 26.0, 27.7,
    ];
    let scan =
        power_scan(&setup(0.0), &cloud, &frame, &powers, &opts).map_err(|e| e.to_string())?;
    let ratios: Vec<f64> = scan.iter().map(|r| r.n_corrected / r.n_naive).collect();
    let above_one = ratios.iter().all(|&r| r > 1.0);
    let drop = (1..ratios.len()).find(|&i| ratios[i] <= ratios[i - 1]);
    let increasing = drop.is_none();
    let beyond =
        power_scan(&setup(0.0), &cloud, &frame, &[29.0, 30.0], &opts).map_err(|e| e.to_string())?;
    check(
        decreasing && above_one && increasing,
        format!(
            "peak OD {:.4} > {:.4} > {:.4} at 19.7/24.9/27.7 W; N_corr/N_naive {:.2} .. {:.2} over 1-27.7 W ({}); info: {:.2} at 29 W, {:.2} at 30 W",
            ods[0],
            ods[1],
            ods[2],
            ratios[0],
            ratios[ratios.len() - 1],
            match drop {
                None => "increasing".to_string(),
                Some(i) => format!(
                    "NOT increasing: {:.2} at {} W -> {:.2} at {} W",
                    ratios[i - 1],
                    powers[i - 1],
                    ratios[i],
                    powers[i]
                ),
            },
            beyond[0].n_corrected / beyond[0].n_naive,
            beyond[1].n_corrected / beyond[1].n_naive,
        ),
    )
}

fn c8_linearity() -> Outcome {
    let cat = Catalog::bundled_rb87();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let states = [
        state("5S1/2", 1, 2, 0),
        state("5S1/2", 1, 1, -1),
        state("5P3/2", 3, 3, 2),
        state("5P3/2", 3, 2, 0),
        state("5P1/2", 1, 1, 1),
    ];
    for _ in 0..500 {
        let st = &states[rng.random_range(0..states.len())];
        let p = rng.random_range(0.01..30.0);
        let k = rng.random_range(0.1..10.0);
        let (x, y, z) = (
            rng.random_range(-3e-3..3e-3),
            rng.random_range(-40e-6..40e-6),
            rng.random_range(-40e-6..40e-6),
        );
        let b = beam(p);
        let s = light_shift(&cat, &b, st, x, y, z).unwrap().shift_hz;
        let sk = light_shift(&cat, &beam(k * p), st, x, y, z)
            .unwrap()
            .shift_hz;
        let per_i = shift_per_intensity(&cat, 1064e-9, st).unwrap();
        let on_axis = light_shift(&cat, &b, st, x, 0.0, 0.0).unwrap().shift_hz;
        let w = b.radius_at(x);
        let gauss = (-2.0 * (y * y + z * z) / (w * w)).exp();
        let errs = [
            (sk - k * s).abs() / (k * s).abs(),
            (s - per_i * b.intensity(x, y, z)).abs() / s.abs(),
            (s - on_axis * gauss).abs() / on_axis.abs(),
        ];
        for e in errs {
            if e.is_finite() {
                worst = worst.max(e);
            }
        }
    }
    check(
        worst <= 1e-12,
        format!("500 seeded cases, worst relative error {worst:.1e} (limit 1e-12)"),
    )
}

fn c9_equipotential() -> Outcome {
    let cat = Catalog::bundled_rb87();
    let t = TrapPotential::new(&cat, beam(1.0), state("5S1/2", 1, 2, 0)).unwrap();
    let prof = t
        .equipotential_profile(0.5 * t.depth_joules(), 401)
        .map_err(|e| e.to_string())?;
    let r = prof[200].1;
    let closed = 17e-6 * (2f64.ln() / 2.0).sqrt();
    let e_r = rel(r, closed);
    let level = odt_stark::CONSTANTS.k_b * 100e-6;
    let t27 = t.with_beam(beam(27.7)).unwrap();
    let q = AreaQuadrature {
        points: 2001,
        rel_tol: 1e-3,
        max_refinements: 0,
    };
    let coarse = t27
        .equipotential_area_level(level, None, q)
        .map_err(|e| e.to_string())?;
    let fine = t27
        .equipotential_area_level(level, None, AreaQuadrature { points: 4001, ..q })
        .map_err(|e| e.to_string())?;
    let e_q = rel(coarse, fine);
    check(
        e_r < 1e-9 && e_q < 1e-3,
        format!("r(focus) rel error {e_r:.1e} (limit 1e-9); area 2001 vs 4001 points differ {e_q:.1e} (limit 1e-3)"),
    )
}

fn run_cli(out: &Path, threads: usize, args: &[&str]) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_odtstark"))
        .arg("--out")
        .arg(out)
        .arg("--threads")
        .arg(threads.to_string())
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !status.status.success() {
        return Err(String::from_utf8_lossy(&status.stderr).into_owned());
    }
    Ok(())
}

fn c10_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let small = [
        "--set",
        "frame.width_px=21",
        "--set",
        "frame.height_px=11",
        "--set",
        "power_scan.powers_W=[0.0,19.7,27.7]",
        "--set",
        "beam.power_W=24.9",
    ];
    let commands: [&[&str]; 5] = [
        &["shift"],
        &["potential"],
        &["sigma-eff"],
        &["synth-od"],
        &["power-scan"],
    ];
    let runs = [("a", 1usize), ("b", 1), ("c", 4)];
    for (name, threads) in runs {
        for cmd in commands {
            let mut args: Vec<&str> = cmd.to_vec();
            args.extend_from_slice(&small);
            run_cli(&dir.path().join(name), threads, &args)?;
        }
    }
    let mut files: Vec<_> = std::fs::read_dir(dir.path().join("a"))
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().file_name())
        .collect();
    files.sort();
    for f in &files {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        for other in ["b", "c"] {
            let b = std::fs::read(dir.path().join(other).join(f)).map_err(|e| e.to_string())?;
            if a != b {
                return Err(format!(
                    "{} differs between runs a and {other}",
                    f.to_string_lossy()
                ));
            }
        }
    }
    check(
        files.len() >= 8,
        format!(
            "{} output files byte-identical across 2 runs at 1 thread and 1 run at 4 threads",
            files.len()
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("peak ground-state shift", c1_peak_shift),
        ("trap depth", c2_trap_depth),
        ("ground-state mF degeneracy", c3_mf_degeneracy),
        ("Wigner oracle equivalence", c4_wigner_oracle),
        ("forward-inverse roundtrip", c5_roundtrip),
        ("zero-power equivalence", c6_zero_power),
        ("OD-vs-power trend", c7_trend),
        ("linearity and factorization", c8_linearity),
        ("equipotential area", c9_equipotential),
        ("determinism", c10_determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {:>2}. {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2}. {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
