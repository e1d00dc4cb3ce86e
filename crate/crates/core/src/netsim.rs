//! Users, servers, star and loop branches, and routing a session onto them.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::adversary::{ChannelLeg, EveStrategy};
use crate::error::{QsdcError, Result};
use crate::protocol::{random_message, LinkPlan, Session, SessionConfig, SessionResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyKind {
    /// Every branch server links directly to every other through the hub.
    Star,
    /// Branch servers sit on a ring in list order.
    Loop,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchSpec {
    pub server_id: u32,
    #[serde(default)]
    pub user_ids: Vec<u32>,
}

/// Unvalidated topology description, as found in a config file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySpec {
    pub kind: TopologyKind,
    pub branches: Vec<BranchSpec>,
}

/// A validated topology.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Topology {
    kind: TopologyKind,
    branches: Vec<BranchSpec>,
    #[serde(skip)]
    user_branch: BTreeMap<u32, usize>,
}

impl Topology {
    pub fn kind(&self) -> TopologyKind {
        self.kind
    }

    pub fn branches(&self) -> &[BranchSpec] {
        &self.branches
    }

    pub fn server_of(&self, user: u32) -> Result<u32> {
        self.branch_of(user).map(|b| self.branches[b].server_id)
    }

    fn branch_of(&self, user: u32) -> Result<usize> {
        self.user_branch
            .get(&user)
            .copied()
            .ok_or_else(|| QsdcError::Lookup(format!("user {user}")))
    }

    /// Servers from branch `from` to branch `to`, both included.
    fn server_path(&self, from: usize, to: usize) -> Vec<u32> {
        let id = |b: usize| self.branches[b].server_id;
        if from == to {
            return vec![id(from)];
        }
        match self.kind {
            TopologyKind::Star => vec![id(from), id(to)],
            TopologyKind::Loop => {
                let k = self.branches.len();
                let fwd = (to + k - from) % k;
                let back = (from + k - to) % k;
                let forward = match fwd.cmp(&back) {
                    std::cmp::Ordering::Less => true,
                    std::cmp::Ordering::Greater => false,
                    std::cmp::Ordering::Equal => id((from + 1) % k) <= id((from + k - 1) % k),
                };
                let steps = fwd.min(back);
                (0..=steps)
                    .map(|i| {
                        if forward {
                            id((from + i) % k)
                        } else {
                            id((from + k - i % k) % k)
                        }
                    })
                    .collect()
            }
        }
    }
}

pub fn build_topology(spec: &TopologySpec) -> Result<Topology> {
    if spec.branches.is_empty() {
        return Err(QsdcError::Validation("topology needs at least one server".into()));
    }
    let mut servers = BTreeSet::new();
    let mut user_branch = BTreeMap::new();
    for (i, b) in spec.branches.iter().enumerate() {
        if !servers.insert(b.server_id) {
            return Err(QsdcError::Validation(format!("server {} appears twice", b.server_id)));
        }
        for &u in &b.user_ids {
            if let Some(prev) = user_branch.insert(u, i) {
                return Err(QsdcError::Validation(format!(
                    "user {u} is in branch {prev} and branch {i}"
                )));
            }
        }
    }
    Ok(Topology {
        kind: spec.kind,
        branches: spec.branches.clone(),
        user_branch,
    })
}

/// Who serves a session and which servers relay the quantum line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionRoute {
    pub sender_id: u32,
    pub receiver_id: u32,
    /// Server of the receiver's branch; plays Alice.
    pub serving_server_id: u32,
    /// Every other server on the path from the serving server to the
    /// sender's branch, in travel order.
    pub relay_server_ids: Vec<u32>,
}

pub fn route_session(topology: &Topology, sender_id: u32, receiver_id: u32) -> Result<SessionRoute> {
    let s = topology.branch_of(sender_id)?;
    let r = topology.branch_of(receiver_id)?;
    if sender_id == receiver_id {
        return Err(QsdcError::Validation(format!(
            "user {sender_id} cannot open a session with itself"
        )));
    }
    let path = topology.server_path(r, s);
    Ok(SessionRoute {
        sender_id,
        receiver_id,
        serving_server_id: path[0],
        relay_server_ids: path[1..].to_vec(),
    })
}

/// Relays per leg. The serving server and the receiver share a branch, so
/// Alice→Charlie is direct; Charlie→Bob crosses the relays outward and
/// Bob→Alice crosses them back.
pub fn link_plan(route: &SessionRoute) -> LinkPlan {
    let out = route.relay_server_ids.clone();
    let back: Vec<u32> = out.iter().rev().copied().collect();
    LinkPlan {
        relays: BTreeMap::from([
            (ChannelLeg::AliceToCharlie, Vec::new()),
            (ChannelLeg::CharlieToBob, out),
            (ChannelLeg::BobToAlice, back),
        ]),
    }
}

/// Runs a session along `route` with a random message.
pub fn run_network_session(
    topology: &Topology,
    route: &SessionRoute,
    config: &SessionConfig,
) -> Result<SessionResult> {
    let expected = route_session(topology, route.sender_id, route.receiver_id)?;
    if expected != *route {
        return Err(QsdcError::Validation(format!(
            "route {route:?} does not match the topology (expected {expected:?})"
        )));
    }
    let plan = link_plan(route);
    if let EveStrategy::InterceptResend { legs, at_relay: Some(relay) } = &config.eve {
        if !legs.iter().any(|l| plan.relays(*l).contains(relay)) {
            return Err(QsdcError::config(
                "eve.at_relay",
                format!("server {relay} is not a relay on any attacked leg"),
            ));
        }
    }
    config.validate()?;
    let message = random_message(config);
    Session::with_links(config.clone(), plan)?.run(&message)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: TopologyKind, branches: &[(u32, &[u32])]) -> TopologySpec {
        TopologySpec {
            kind,
            branches: branches
                .iter()
                .map(|(s, u)| BranchSpec { server_id: *s, user_ids: u.to_vec() })
                .collect(),
        }
    }

    #[test]
    fn single_branch_star() {
        let t = build_topology(&spec(TopologyKind::Star, &[(1, &[10, 11, 12])])).unwrap();
        let r = route_session(&t, 10, 12).unwrap();
        assert_eq!(r.serving_server_id, 1);
        assert!(r.relay_server_ids.is_empty());
    }

    #[test]
    fn validation() {
        assert!(build_topology(&spec(TopologyKind::Loop, &[(1, &[10, 11]), (2, &[12, 13])])).is_ok());
        assert!(matches!(
            build_topology(&spec(TopologyKind::Loop, &[(1, &[10, 11]), (2, &[11])])),
            Err(QsdcError::Validation(_))
        ));
        assert!(build_topology(&spec(TopologyKind::Star, &[(1, &[10]), (1, &[11])])).is_err());
        assert!(build_topology(&spec(TopologyKind::Star, &[])).is_err());
    }

    #[test]
    fn lookups_and_self_sessions() {
        let t = build_topology(&spec(TopologyKind::Star, &[(1, &[10, 11])])).unwrap();
        assert!(matches!(route_session(&t, 10, 99), Err(QsdcError::Lookup(_))));
        assert!(matches!(route_session(&t, 10, 10), Err(QsdcError::Validation(_))));
    }

    #[test]
    fn loop_paths_by_hand() {
        // Ring 1-2-3-4-5 (and back to 1).
        let t = build_topology(&spec(
            TopologyKind::Loop,
            &[(1, &[10]), (2, &[20]), (3, &[30]), (4, &[40]), (5, &[50])],
        ))
        .unwrap();
        // Receiver on 3, sender on 1: 3 → 2 → 1.
        let r = route_session(&t, 10, 30).unwrap();
        assert_eq!((r.serving_server_id, r.relay_server_ids.clone()), (3, vec![2, 1]));
        // Receiver on 1, sender on 4: 1 → 5 → 4.
        let r = route_session(&t, 40, 10).unwrap();
        assert_eq!((r.serving_server_id, r.relay_server_ids), (1, vec![5, 4]));

        // Three-server ring: branches 1 and 3 are neighbours.
        let t3 = build_topology(&spec(TopologyKind::Loop, &[(1, &[10]), (2, &[20]), (3, &[30])])).unwrap();
        let r = route_session(&t3, 10, 30).unwrap();
        assert_eq!((r.serving_server_id, r.relay_server_ids), (3, vec![1]));
    }

    #[test]
    fn loop_ties_go_to_the_smaller_neighbour() {
        // Ring 7-3-9-5; from 7 to 9 both arcs have length 2, neighbours 3 and 5.
        let t = build_topology(&spec(
            TopologyKind::Loop,
            &[(7, &[70]), (3, &[30]), (9, &[90]), (5, &[50])],
        ))
        .unwrap();
        let r = route_session(&t, 90, 70).unwrap();
        assert_eq!(r.relay_server_ids, vec![3, 9]);
        // From 3 to 5: neighbours 9 and 7, so go through 7.
        let r = route_session(&t, 50, 30).unwrap();
        assert_eq!(r.relay_server_ids, vec![7, 5]);
    }

    #[test]
    fn star_paths_have_one_relay() {
        let t = build_topology(&spec(TopologyKind::Star, &[(1, &[10]), (2, &[20]), (3, &[30])])).unwrap();
        let r = route_session(&t, 10, 30).unwrap();
        assert_eq!((r.serving_server_id, r.relay_server_ids), (3, vec![1]));
    }

    #[test]
    fn spec_serde() {
        let j = r#"{"kind":"loop","branches":[{"server_id":1,"user_ids":[1,2]},{"server_id":2,"user_ids":[3]}]}"#;
        let s: TopologySpec = serde_json::from_str(j).unwrap();
        assert_eq!(s.kind, TopologyKind::Loop);
        assert!(serde_json::from_str::<TopologySpec>(r#"{"kind":"ring","branches":[]}"#).is_err());
    }
}
