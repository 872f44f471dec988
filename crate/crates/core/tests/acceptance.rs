//! Acceptance suite. Runs without the libtest harness so every criterion
//! prints exactly one PASS/FAIL line, then exits non-zero if any failed.

use std::f64::consts::PI;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use oobe_mc::aggregation::{aggregate_emitters, penalty_empirical, LinkContext, Metric};
use oobe_mc::antenna::{OobeCorrelation, PanelPointing};
use oobe_mc::deployment::generate_trial;
use oobe_mc::emitters::{EmitterKind, EmitterNode};
use oobe_mc::geometry::{GroundPoint, EARTH_RADIUS_KM};
use oobe_mc::propagation::fspl;
use oobe_mc::runner::{self, MANIFEST_FILE, TRIALS_FILE};
use oobe_mc::scenario::{Scenario, UeAttachment};
use oobe_mc::units::{bandwidth_rescale, DecibelPower};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const C: f64 = 299_792_458.0;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn with_trials(trials: u32, seed: u64) -> Scenario {
    Scenario {
        trials,
        master_seed: seed,
        ..Scenario::default()
    }
}

// 1. paired repeater sweep reproduces 10*log10(1+F) on the downstream sum
fn repeater_penalty() -> Outcome {
    let t0 = Instant::now();
    let base = with_trials(1000, 20_240_601);
    let baseline = runner::run(&base, 0).map_err(|e| e.to_string())?;
    let mut lines = Vec::new();
    let mut ok = true;
    for (f, expected) in [(1u32, 3.01), (2, 4.77), (4, 6.99)] {
        let variant = Scenario {
            repeater_factor_f: f,
            ..base.clone()
        };
        let out = runner::run(&variant, 0).map_err(|e| e.to_string())?;
        let p = penalty_empirical(out.statistics(), baseline.statistics(), Metric::Down).map_err(|e| e.to_string())?;
        ok &= (p - expected).abs() <= 0.3;
        lines.push(format!("F={f}: {p:.3} dB (want {expected} +/- 0.3)"));
    }
    let elapsed = t0.elapsed().as_secs_f64();
    ok &= elapsed < 60.0;
    check(ok, format!("{}; {elapsed:.1} s", lines.join(", ")))
}

// 2. bandwidth rescale of a flat spectrum
fn bandwidth_rescaling() -> Outcome {
    let p = DecibelPower::new(-70.0, 10e3).map_err(|e| e.to_string())?;
    let q = bandwidth_rescale(p, 200e6).map_err(|e| e.to_string())?.dbm();
    check((q - (-26.99)).abs() <= 0.01, format!("{q:.4} dBm/200 MHz"))
}

// 3. repeater-only attachment with relaying doubles the upstream population
fn relay_doubling() -> Outcome {
    let base = Scenario {
        ues_per_gnb: 5,
        ..with_trials(200, 7)
    };
    let relayed = Scenario {
        repeater_factor_f: 2,
        repeaters_relay_upstream: true,
        ue_attachment: UeAttachment::RepeaterOnly,
        ..base.clone()
    };
    let mut worst = String::new();
    let mut total = (0usize, 0usize);
    for i in 0..base.trials as u64 {
        let a = generate_trial(&base, i).map_err(|e| e.to_string())?;
        let b = generate_trial(&relayed, i).map_err(|e| e.to_string())?;
        let (na, nb) = (a.counts.upstream(), b.counts.upstream());
        let active = |d: &oobe_mc::deployment::TrialDeployment| {
            d.emitters.iter().filter(|e| e.active && e.kind.direction() == oobe_mc::emitters::Direction::Upstream).count()
        };
        total.0 += na;
        total.1 += nb;
        if nb != 2 * na || active(&b) != 2 * active(&a) {
            worst = format!("trial {i}: baseline {na}, relayed {nb}");
            break;
        }
    }
    check(
        worst.is_empty(),
        if worst.is_empty() {
            format!("{} trials, upstream emitters {} -> {}", base.trials, total.0, total.1)
        } else {
            worst
        },
    )
}

// 4. power-control bounds, dominance and spread
fn power_control() -> Outcome {
    let s = with_trials(1000, 99);
    let span = s.power_control.p_max_dbm - s.power_control.p_min_dbm;
    let (mut lo, mut hi, mut n) = (f64::INFINITY, f64::NEG_INFINITY, 0usize);
    for i in 0..s.trials as u64 {
        let d = generate_trial(&s, i).map_err(|e| e.to_string())?;
        for e in d.emitters.iter().filter(|e| e.kind == EmitterKind::Ue) {
            let l = e.l_pwrctl.db();
            if !(0.0..=span).contains(&l) {
                return Err(format!("(a) trial {i}: L_PwrCtl {l} outside [0, {span}]"));
            }
            lo = lo.min(l);
            hi = hi.max(l);
            n += 1;
        }
    }

    let mut off = s.clone();
    off.power_control.enabled = false;
    let with = runner::run_trials(&s, 0).map_err(|e| e.to_string())?;
    let without = runner::run_trials(&off, 0).map_err(|e| e.to_string())?;
    for (a, b) in with.iter().zip(&without) {
        for m in Metric::ALL {
            if b.metric_mw(m) < a.metric_mw(m) {
                return Err(format!("(b) trial {}: {m} drops when power control is disabled", a.trial_index));
            }
        }
    }

    check(
        lo == 0.0 && hi >= 40.0,
        format!("(a) {n} UEs in [0, {span}]; (b) dominance over {} trials; (c) span {lo:.2}..{hi:.2} dB", with.len()),
    )
}

// 5. free-space loss anchor and distance slope
fn free_space() -> Outcome {
    let f = 23.8e9;
    let at = |d: f64| fspl(f, d).map(|x| x.db()).map_err(|e| e.to_string());
    let l1 = at(1.0)?;
    let mut ok = (l1 - 119.98).abs() <= 0.01;
    let mut worst: f64 = 0.0;
    for d in [0.01, 0.5, 1.0, 3.7, 100.0, 824.0] {
        let delta = at(2.0 * d)? - at(d)?;
        worst = worst.max((delta - 6.0206).abs());
    }
    ok &= worst <= 0.001;
    check(ok, format!("fspl(1 km) = {l1:.4} dB; doubling slope error {worst:.2e} dB"))
}

// 6. engine sum against a first-principles oracle

/// Unit vector in the local ENU-like frame from azimuth (ccw from +x) and elevation.
fn dir(az_deg: f64, el_deg: f64) -> [f64; 3] {
    let (az, el) = (az_deg.to_radians(), el_deg.to_radians());
    [el.cos() * az.cos(), el.cos() * az.sin(), el.sin()]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn unit(a: [f64; 3]) -> [f64; 3] {
    let n = dot(a, a).sqrt();
    [a[0] / n, a[1] / n, a[2] / n]
}

/// Panel axes: boresight, horizontal (phi = 90), panel zenith (theta = 0).
fn panel_axes(p: &PanelPointing) -> ([f64; 3], [f64; 3], [f64; 3]) {
    let (az, tilt) = (p.azimuth_deg.to_radians(), p.downtilt_deg.to_radians());
    let bore = [tilt.cos() * az.cos(), tilt.cos() * az.sin(), -tilt.sin()];
    let horiz = [-az.sin(), az.cos(), 0.0];
    let up = [tilt.sin() * az.cos(), tilt.sin() * az.sin(), tilt.cos()];
    (bore, horiz, up)
}

fn oracle_tx_gain_linear(e: &EmitterNode, toward: [f64; 3], s: &Scenario) -> f64 {
    let ant = match e.kind {
        EmitterKind::Gnb => &s.antennas.gnb,
        EmitterKind::RepeaterDown | EmitterKind::RepeaterUp => s.antennas.repeater.as_ref().unwrap_or(&s.antennas.gnb),
        EmitterKind::Ue => &s.antennas.ue,
    };
    let (bore, horiz, up) = panel_axes(&e.pointing);
    let theta = dot(toward, up).clamp(-1.0, 1.0).acos().to_degrees();
    let phi = dot(toward, horiz).atan2(dot(toward, bore)).to_degrees();
    let el = &ant.element;
    let a_h = (12.0 * (phi / el.phi_3db_deg).powi(2)).min(el.am_db);
    let a_v = (12.0 * ((theta - 90.0) / el.theta_3db_deg).powi(2)).min(el.sla_v_db);
    let element = 10f64.powf((el.g_max_dbi - (a_h + a_v).min(el.am_db)) / 10.0);
    if s.antennas.oobe_correlation == OobeCorrelation::Uncorrelated {
        return element;
    }
    let arr = &ant.array;
    let n = (arr.rows * arr.cols) as f64;
    if arr.rows * arr.cols == 1 {
        return element;
    }
    // explicit element positions in wavelengths, weights conjugate to the steering direction
    let steer = dir(e.steer_azimuth_deg, e.steer_elevation_deg);
    let k = 2.0 * PI;
    let mut sum = Complex64::new(0.0, 0.0);
    for r in 0..arr.rows {
        for c in 0..arr.cols {
            let pos = [0, 1, 2].map(|i| arr.spacing_wavelengths * (r as f64 * up[i] + c as f64 * horiz[i]));
            let w = Complex64::from_polar(1.0 / n.sqrt(), -k * dot(pos, steer));
            sum += w * Complex64::from_polar(1.0, k * dot(pos, toward));
        }
    }
    element * sum.norm_sqr().max(1e-12)
}

/// Received milliwatts, multiplying linear factors in an Earth-centred frame.
fn oracle_received_mw(e: &EmitterNode, s: &Scenario) -> f64 {
    let g = &s.geometry;
    let (re, h) = (EARTH_RADIUS_KM, g.altitude_km);
    let el0 = g.elevation_deg.to_radians();
    // central angle between the footprint centre and the sub-satellite point
    let nadir = (re * el0.cos() / (re + h)).asin();
    let gamma = PI / 2.0 - el0 - nadir;
    let sat_ecef = [(re + h) * gamma.sin(), 0.0, (re + h) * gamma.cos()];
    let centre_ecef = [0.0, 0.0, re];
    let sat = sub(sat_ecef, centre_ecef);
    let p = [e.position.x_km, e.position.y_km, 0.0];
    let los = sub(sat, p);
    let range_km = dot(los, los).sqrt();
    let to_sat = unit(los);
    let elev = to_sat[2].asin();
    if elev <= 0.0 {
        return 0.0;
    }

    let off = dot(unit(sub(p, sat)), unit(sub([0.0; 3], sat))).clamp(-1.0, 1.0).acos().to_degrees();
    let sp = &s.sounder;
    let g_sat = 10f64.powf((sp.g_max_dbi - sp.rolloff_coeff_db_per_deg2 * off * off).max(sp.floor_dbi) / 10.0);

    let lambda = C / s.frequency_hz;
    let path = (4.0 * PI * range_km * 1e3 / lambda).powi(2);
    let gas = 10f64.powf(s.zenith_attenuation_db / elev.sin() / 10.0);
    let other = 10f64.powf(
        match e.kind {
            EmitterKind::Gnb => s.l_other_db.gnb,
            EmitterKind::RepeaterDown | EmitterKind::RepeaterUp => s.l_other_db.repeater,
            EmitterKind::Ue => s.l_other_db.ue,
        } / 10.0,
    );
    let p_tx = 10f64.powf((e.oobe_trp.dbm() - e.l_pwrctl.db()) / 10.0);
    p_tx * oracle_tx_gain_linear(e, to_sat, s) * g_sat / (path * gas * other)
}

fn random_emitters(rng: &mut ChaCha8Rng, s: &Scenario) -> Vec<EmitterNode> {
    let n = rng.random_range(0..=10);
    (0..n)
        .map(|_| {
            let kind = EmitterKind::ALL[rng.random_range(0..4)];
            let r = s.geometry.footprint_radius_km * rng.random::<f64>().sqrt();
            let a = rng.random::<f64>() * 2.0 * PI;
            EmitterNode {
                kind,
                position: GroundPoint::new(r * a.cos(), r * a.sin()).expect("in range"),
                oobe_trp: DecibelPower::new(rng.random_range(-60.0..-10.0), s.ref_bandwidth_hz).expect("valid"),
                l_pwrctl: oobe_mc::units::Decibel::new(if kind == EmitterKind::Ue { rng.random_range(0.0..62.0) } else { 0.0 })
                    .expect("finite"),
                pointing: PanelPointing {
                    azimuth_deg: rng.random_range(0.0..360.0),
                    downtilt_deg: rng.random_range(-10.0..15.0),
                },
                steer_azimuth_deg: rng.random_range(-180.0..180.0),
                steer_elevation_deg: rng.random_range(-10.0..30.0),
                serving_position: None,
                high_power: false,
                active: rng.random_bool(0.8),
            }
        })
        .collect()
}

fn first_principles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    let mut emitters_seen = 0;
    for k in 0..50 {
        let mut s = Scenario::default();
        s.geometry.elevation_deg = rng.random_range(20.0..=90.0);
        s.geometry.altitude_km = rng.random_range(500.0..1200.0);
        s.antennas.oobe_correlation = if k % 2 == 0 {
            OobeCorrelation::Uncorrelated
        } else {
            OobeCorrelation::Correlated
        };
        let ems = random_emitters(&mut rng, &s);
        emitters_seen += ems.len();
        let engine = aggregate_emitters(k, &ems, &LinkContext::from_scenario(&s));
        let mut by_kind = [0.0f64; 4];
        for e in ems.iter().filter(|e| e.active) {
            let i = EmitterKind::ALL.iter().position(|&x| x == e.kind).expect("known kind");
            by_kind[i] += oracle_received_mw(e, &s);
        }
        let pairs = [
            (engine.gnb_mw, by_kind[0]),
            (engine.rep_down_mw, by_kind[1]),
            (engine.ue_mw, by_kind[2]),
            (engine.rep_up_mw, by_kind[3]),
            (engine.combined_mw(), by_kind.iter().sum()),
        ];
        for (got, want) in pairs {
            let rel = if want == 0.0 { got.abs() } else { ((got - want) / want).abs() };
            worst = worst.max(rel);
        }
    }
    check(worst <= 1e-9, format!("50 deployments, {emitters_seen} emitters, max relative error {worst:.2e}"))
}

// 7. byte-identical artifacts for identical inputs
fn strip_timestamps(manifest: &str) -> String {
    manifest
        .lines()
        .filter(|l| !l.contains("\"started_at\"") && !l.contains("\"finished_at\""))
        .collect::<Vec<_>>()
        .join("\n")
}

fn reproducibility() -> Outcome {
    let s = with_trials(200, 4242);
    let dirs = [tempfile::tempdir(), tempfile::tempdir()];
    let mut files = Vec::new();
    for (dir, threads) in dirs.iter().zip([1usize, 0]) {
        let dir = dir.as_ref().map_err(|e| e.to_string())?.path();
        let out = runner::run(&s, threads).map_err(|e| e.to_string())?;
        runner::write_outputs(&out, dir, true).map_err(|e| e.to_string())?;
        let read = |name: &str| std::fs::read_to_string(Path::new(dir).join(name)).map_err(|e| e.to_string());
        files.push((read(TRIALS_FILE)?, strip_timestamps(&read(MANIFEST_FILE)?)));
    }
    check(
        files[0] == files[1],
        format!("trials.csv {} bytes, manifest identical apart from timestamps (1 thread vs auto)", files[0].0.len()),
    )
}

// 8. standard error shrinks as 1/sqrt(trials)
fn standard_error_scaling() -> Outcome {
    let mut se = Vec::new();
    for n in [100u32, 400, 1600] {
        let out = runner::run(&with_trials(n, 8), 0).map_err(|e| e.to_string())?;
        let st = out.statistics().metric(Metric::Combined);
        se.push((n, st.std_mw / (n as f64).sqrt()));
    }
    let (n0, se0) = se[0];
    let mut ok = true;
    let mut parts = Vec::new();
    for &(n, s) in &se[1..] {
        let predicted = se0 * (n0 as f64 / n as f64).sqrt();
        let ratio = s / predicted;
        ok &= (0.5..=2.0).contains(&ratio);
        parts.push(format!("n={n}: observed/predicted {ratio:.3}"));
    }
    check(ok, parts.join(", "))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1 repeater downstream penalty", repeater_penalty),
        ("2 bandwidth rescale", bandwidth_rescaling),
        ("3 upstream relay doubling", relay_doubling),
        ("4 power control bounds/dominance/spread", power_control),
        ("5 free-space path loss", free_space),
        ("6 first-principles aggregate", first_principles),
        ("7 reproducible artifacts", reproducibility),
        ("8 standard error scaling", standard_error_scaling),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        match f() {
            Ok(detail) => println!("PASS  criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  criterion {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
