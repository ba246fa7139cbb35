use super::full::{reveal, Reveal};
use super::strategy::StrategySpec;
use super::world::World;
use super::{AdversaryConfig, AdversaryRun, RunStats};
use crate::error::Result;
use crate::trace::EventKind;

#[derive(Default)]
struct Lane {
    history: Vec<(usize, u64)>,
    trap: Option<usize>,
    potentials: Vec<usize>,
    progressive: Vec<u64>,
    withheld: usize,
}

/// The direct diagonalization: each opponent gets a trap and a sequence of
/// potential sets. The current potential set meets everything the opponent
/// has enumerated; once the opponent enumerates it, the trap is made to meet
/// every set enumerated before it and a new potential set takes over.
pub fn run_warmup(strategies: &[StrategySpec], config: &AdversaryConfig) -> Result<AdversaryRun> {
    let mut world = World::new("adversary-warmup");
    let mut players: Vec<_> = strategies.iter().map(StrategySpec::build).collect();
    for p in &mut players {
        p.reset();
    }
    let mut lanes: Vec<Lane> = strategies.iter().map(|_| Lane::default()).collect();

    for s in 0..config.stages {
        for (e, lane) in lanes.iter_mut().enumerate() {
            match reveal(&mut world, e, s, players[e].as_mut(), &mut lane.history, lane.trap, &lane.potentials) {
                Reveal::Withheld => lane.withheld += 1,
                Reveal::Accepted | Reveal::Silent => {}
            }
            if lane.history.is_empty() {
                continue;
            }
            let sub = Some(e as u64);
            if lane.trap.is_none() {
                for role in ["potential", "trap"] {
                    let set = world.fresh(s) as usize;
                    world.trace.push(
                        s,
                        sub,
                        EventKind::Define,
                        vec![("set", set.to_string()), ("role", role.into()), ("e", e.to_string())],
                    );
                    if role == "trap" {
                        lane.trap = Some(set);
                    } else {
                        lane.potentials.push(set);
                    }
                }
            }
            let (Some(t), Some(&p)) = (lane.trap, lane.potentials.last()) else {
                continue;
            };
            if let Some(pos) = lane.history.iter().position(|&(v, _)| v == p) {
                world.trace.push(
                    s,
                    sub,
                    EventKind::Progressive,
                    vec![("e", e.to_string()), ("n", (lane.potentials.len() - 1).to_string())],
                );
                let before: Vec<usize> = lane.history[..pos].iter().map(|&(v, _)| v).collect();
                for i in before {
                    if i != t {
                        world.intersect(t, i, s, e, 4);
                    }
                }
                let next = world.fresh(s) as usize;
                world.trace.push(
                    s,
                    sub,
                    EventKind::Define,
                    vec![("set", next.to_string()), ("role", "potential".into()), ("e", e.to_string())],
                );
                lane.potentials.push(next);
                lane.progressive.push(s);
            } else {
                let enumerated: Vec<usize> = lane.history.iter().map(|&(v, _)| v).collect();
                for i in enumerated {
                    if i != p {
                        world.intersect(p, i, s, e, 3);
                    }
                }
            }
        }
        world.totalize(s, None);
    }

    let family = world.finish(config.stages)?;
    let stats = RunStats {
        mentioned: world.mentioned(),
        potential_sets: lanes.iter().map(|l| l.potentials.len()).sum(),
        intersections: world.intersections(),
        enumerations: lanes.iter().map(|l| l.history.clone()).collect(),
        withheld: lanes.iter().map(|l| l.withheld).collect(),
        progressive: lanes.iter().map(|l| l.progressive.clone()).collect(),
        trap_redefinitions: vec![0; lanes.len()],
    };
    Ok(AdversaryRun {
        family,
        trace: world.trace,
        stats,
    })
}
