//! Per-trial network drops.
//!
//! A trial is a pure function of `(scenario, master_seed, trial_index)`.
//! The trial seed is `splitmix64(master_seed + (trial_index + 1) * GOLDEN_GAMMA)`
//! and each kind of draw uses its own ChaCha8 stream keyed by that seed, so
//! changing the repeater factor leaves gNB positions, gNB activity and UE
//! positions untouched. That is what makes paired runs comparable trial by
//! trial.
//!
//! Placement: gNB count is Poisson with mean `density * footprint area`,
//! positions uniform in the footprint disc by radial inversion
//! (`r = R * sqrt(u)`, `angle = 2*pi*v`). Repeaters and UEs are uniform in
//! their gNB's cell disc, redrawn until they fall inside the footprint.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::antenna::PanelPointing;
use crate::emitters::{assign_oobe_trp, coupling_loss, ue_transmit_power, EmitterKind, EmitterNode};
use crate::error::Result;
use crate::geometry::{in_footprint, GroundPoint, SounderGeometry};
use crate::scenario::{Scenario, UeAttachment};
use crate::units::Decibel;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Redraw limit when clipping a cell disc to the footprint. The gNB itself
/// is always inside, so exhausting this only happens for degenerate inputs.
const MAX_CLIP_ATTEMPTS: usize = 10_000;

/// Draw purposes, each mapped to its own ChaCha stream.
#[derive(Debug, Clone, Copy)]
#[repr(u64)]
pub enum Stream {
    GnbPositions = 1,
    GnbAttributes = 2,
    RepeaterPositions = 3,
    RepeaterAttributes = 4,
    UePositions = 5,
    UeAttributes = 6,
    GnbActivity = 7,
    RepeaterActivity = 8,
    UeActivity = 9,
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn trial_seed(master_seed: u64, trial_index: u64) -> u64 {
    splitmix64(master_seed.wrapping_add(trial_index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

pub fn stream_rng(trial_seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
    rng.set_stream(stream as u64);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EmitterCounts {
    pub gnb: usize,
    pub repeater_down: usize,
    pub repeater_up: usize,
    pub ue: usize,
}

impl EmitterCounts {
    pub fn tally<'a>(emitters: impl IntoIterator<Item = &'a EmitterNode>) -> Self {
        let mut c = EmitterCounts::default();
        for e in emitters {
            *c.slot(e.kind) += 1;
        }
        c
    }

    fn slot(&mut self, kind: EmitterKind) -> &mut usize {
        match kind {
            EmitterKind::Gnb => &mut self.gnb,
            EmitterKind::RepeaterDown => &mut self.repeater_down,
            EmitterKind::RepeaterUp => &mut self.repeater_up,
            EmitterKind::Ue => &mut self.ue,
        }
    }

    pub fn upstream(&self) -> usize {
        self.ue + self.repeater_up
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialDeployment {
    /// Ordered gNBs, then repeaters (grouped by gNB), then UEs, each UE
    /// immediately followed by its upstream relay when it has one.
    pub emitters: Vec<EmitterNode>,
    pub counts: EmitterCounts,
    pub trial_index: u64,
    pub trial_seed: u64,
}

/// A repeater and the index of the gNB whose cell it serves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepeaterSite {
    pub position: GroundPoint,
    pub gnb_index: usize,
}

fn uniform_in_disc<R: Rng>(center: &GroundPoint, radius_km: f64, rng: &mut R) -> GroundPoint {
    let r = radius_km * rng.random::<f64>().sqrt();
    let angle = std::f64::consts::TAU * rng.random::<f64>();
    GroundPoint {
        x_km: center.x_km + r * angle.cos(),
        y_km: center.y_km + r * angle.sin(),
    }
}

fn uniform_in_cell<R: Rng>(center: &GroundPoint, radius_km: f64, g: &SounderGeometry, rng: &mut R) -> GroundPoint {
    for _ in 0..MAX_CLIP_ATTEMPTS {
        let p = uniform_in_disc(center, radius_km, rng);
        if in_footprint(&p, g) {
            return p;
        }
    }
    *center
}

pub fn drop_gnbs<R: Rng>(s: &Scenario, rng: &mut R) -> Vec<GroundPoint> {
    let mean = s.gnb_density_per_km2 * s.geometry.footprint_area_km2();
    if mean <= 0.0 {
        return Vec::new();
    }
    let n = Poisson::new(mean).expect("positive finite mean").sample(rng) as usize;
    let origin = GroundPoint::ORIGIN;
    (0..n)
        .map(|_| uniform_in_disc(&origin, s.geometry.footprint_radius_km, rng))
        .collect()
}

/// Exactly `f` repeaters per gNB, uniform in that gNB's cell.
pub fn drop_repeaters<R: Rng>(
    gnbs: &[GroundPoint],
    f: u32,
    cell_radius_km: f64,
    geometry: &SounderGeometry,
    rng: &mut R,
) -> Vec<RepeaterSite> {
    let mut out = Vec::with_capacity(gnbs.len() * f as usize);
    for (gnb_index, gnb) in gnbs.iter().enumerate() {
        for _ in 0..f {
            out.push(RepeaterSite {
                position: uniform_in_cell(gnb, cell_radius_km, geometry, rng),
                gnb_index,
            });
        }
    }
    out
}

fn downstream_node<R: Rng>(kind: EmitterKind, position: GroundPoint, s: &Scenario, rng: &mut R) -> Result<EmitterNode> {
    let panel_az = 360.0 * rng.random::<f64>();
    let half = s.steering.sector_half_width_deg;
    let steer_az = panel_az + half * (2.0 * rng.random::<f64>() - 1.0);
    let steer_el = -s.steering.max_depression_deg * rng.random::<f64>();
    Ok(EmitterNode {
        kind,
        position,
        oobe_trp: assign_oobe_trp(kind, false, &s.oobe, s.ue_max_powers(), s.ref_bandwidth_hz)?,
        l_pwrctl: Decibel::ZERO,
        pointing: PanelPointing {
            azimuth_deg: panel_az,
            downtilt_deg: s.antennas.for_kind(kind).array.mechanical_downtilt_deg,
        },
        steer_azimuth_deg: steer_az,
        steer_elevation_deg: steer_el,
        serving_position: None,
        high_power: false,
        active: false,
    })
}

/// Serving node for a UE: index 0 is the gNB, `1..` are the cell's repeaters.
fn choose_serving(ue: &GroundPoint, gnb: &GroundPoint, repeaters: &[GroundPoint], attach: UeAttachment) -> usize {
    let nearest = |cands: &mut dyn Iterator<Item = (usize, &GroundPoint)>| {
        let mut best: Option<(usize, f64)> = None;
        for (i, p) in cands {
            let d = ue.distance_km(p);
            // strict comparison keeps the lowest index on ties
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        best.map(|(i, _)| i).unwrap_or(0)
    };
    match attach {
        UeAttachment::RepeaterOnly if !repeaters.is_empty() => {
            nearest(&mut repeaters.iter().enumerate().map(|(i, p)| (i + 1, p)))
        }
        _ => nearest(&mut std::iter::once((0, gnb)).chain(repeaters.iter().enumerate().map(|(i, p)| (i + 1, p)))),
    }
}

/// UEs for every cell, each followed by its upstream relay when the serving
/// node is a repeater and relaying is enabled.
pub fn drop_ues<R: Rng>(
    gnbs: &[GroundPoint],
    repeaters: &[RepeaterSite],
    s: &Scenario,
    positions_rng: &mut R,
    attributes_rng: &mut R,
) -> Result<Vec<EmitterNode>> {
    let mut out = Vec::new();
    let mut per_cell: Vec<Vec<GroundPoint>> = vec![Vec::new(); gnbs.len()];
    for r in repeaters {
        per_cell[r.gnb_index].push(r.position);
    }
    let ue_array = &s.antennas.ue.array;
    for (gnb_index, gnb) in gnbs.iter().enumerate() {
        let cell_reps = &per_cell[gnb_index];
        for _ in 0..s.ues_per_gnb {
            let position = uniform_in_cell(gnb, s.cell_radius_km, &s.geometry, positions_rng);
            let high_power = attributes_rng.random::<f64>() < s.high_power_ue_fraction;

            let serving_idx = choose_serving(&position, gnb, cell_reps, s.ue_attachment);
            let serving = if serving_idx == 0 {
                *gnb
            } else {
                cell_reps[serving_idx - 1]
            };

            let loss = coupling_loss(
                &position,
                &serving,
                s.link_frequency_hz,
                s.l_other_db.ue,
                s.min_coupling_distance_m,
            );
            let tx = ue_transmit_power(&s.ue_power_control(high_power), loss);
            let oobe = assign_oobe_trp(EmitterKind::Ue, high_power, &s.oobe, s.ue_max_powers(), s.ref_bandwidth_hz)?;
            let toward = position.azimuth_to_deg(&serving);
            out.push(EmitterNode {
                kind: EmitterKind::Ue,
                position,
                oobe_trp: oobe,
                l_pwrctl: tx.l_pwrctl,
                pointing: PanelPointing {
                    azimuth_deg: toward,
                    downtilt_deg: ue_array.mechanical_downtilt_deg,
                },
                steer_azimuth_deg: toward,
                steer_elevation_deg: 0.0,
                serving_position: Some(serving),
                high_power,
                active: false,
            });

            if serving_idx > 0 && s.repeaters_relay_upstream {
                let toward_gnb = serving.azimuth_to_deg(gnb);
                out.push(EmitterNode {
                    kind: EmitterKind::RepeaterUp,
                    position: serving,
                    oobe_trp: oobe,
                    l_pwrctl: tx.l_pwrctl,
                    pointing: PanelPointing {
                        azimuth_deg: toward_gnb,
                        downtilt_deg: 0.0,
                    },
                    steer_azimuth_deg: toward_gnb,
                    steer_elevation_deg: 0.0,
                    serving_position: Some(*gnb),
                    high_power,
                    active: false,
                });
            }
        }
    }
    Ok(out)
}

/// Bernoulli activity: active with probability `network_loading`, then gated
/// by the TDD share of the emitter's direction. Directions outside the
/// duplex mode stay silent. Both uniforms are always drawn so stream
/// alignment never depends on outcomes.
fn draw_active<R: Rng>(kind: EmitterKind, s: &Scenario, rng: &mut R) -> bool {
    let (u_load, u_tdd) = (rng.random::<f64>(), rng.random::<f64>());
    let (enabled, share) = match kind.direction() {
        crate::emitters::Direction::Downstream => (s.duplex_mode.has_downstream(), s.tdd_downlink_fraction),
        crate::emitters::Direction::Upstream => (s.duplex_mode.has_upstream(), 1.0 - s.tdd_downlink_fraction),
    };
    enabled && u_load < s.network_loading && u_tdd < share
}

pub fn generate_trial(s: &Scenario, trial_index: u64) -> Result<TrialDeployment> {
    let seed = trial_seed(s.master_seed, trial_index);
    let gnbs = drop_gnbs(s, &mut stream_rng(seed, Stream::GnbPositions));
    let repeaters = drop_repeaters(
        &gnbs,
        s.repeater_factor_f,
        s.cell_radius_km,
        &s.geometry,
        &mut stream_rng(seed, Stream::RepeaterPositions),
    );

    let mut emitters = Vec::with_capacity(gnbs.len() * (1 + s.repeater_factor_f as usize + 2 * s.ues_per_gnb as usize));
    let mut attrs = stream_rng(seed, Stream::GnbAttributes);
    let mut activity = stream_rng(seed, Stream::GnbActivity);
    for p in &gnbs {
        let mut node = downstream_node(EmitterKind::Gnb, *p, s, &mut attrs)?;
        node.active = draw_active(node.kind, s, &mut activity);
        emitters.push(node);
    }

    let mut attrs = stream_rng(seed, Stream::RepeaterAttributes);
    let mut activity = stream_rng(seed, Stream::RepeaterActivity);
    for r in &repeaters {
        let mut node = downstream_node(EmitterKind::RepeaterDown, r.position, s, &mut attrs)?;
        node.serving_position = Some(gnbs[r.gnb_index]);
        node.active = draw_active(node.kind, s, &mut activity);
        emitters.push(node);
    }

    let ues = drop_ues(
        &gnbs,
        &repeaters,
        s,
        &mut stream_rng(seed, Stream::UePositions),
        &mut stream_rng(seed, Stream::UeAttributes),
    )?;
    let mut activity = stream_rng(seed, Stream::UeActivity);
    let mut last_ue_active = false;
    for mut node in ues {
        node.active = match node.kind {
            // a relay transmits exactly when the UE it relays does
            EmitterKind::RepeaterUp => last_ue_active,
            _ => {
                last_ue_active = draw_active(node.kind, s, &mut activity);
                last_ue_active
            }
        };
        emitters.push(node);
    }

    Ok(TrialDeployment {
        counts: EmitterCounts::tally(&emitters),
        emitters,
        trial_index,
        trial_seed: seed,
    })
}
