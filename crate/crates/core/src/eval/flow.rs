use serde::{Deserialize, Serialize};

use crate::dataset::DiscretePanel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventFlow {
    /// `(events, non-events)` per timestep.
    pub states: Vec<(u64, u64)>,
    /// `[from][to]` counts between t and t+1 (0 = no event, 1 = event).
    pub transitions: Vec<[[u64; 2]; 2]>,
}

/// Per-timestep event counts and the flow between consecutive timesteps.
pub fn event_flow(panel: &DiscretePanel) -> EventFlow {
    let h = panel.horizon();
    let mut states = vec![(0, 0); h];
    let mut transitions = vec![[[0; 2]; 2]; h.saturating_sub(1)];
    for s in 0..panel.n_subjects() {
        for t in 0..h {
            if panel.label(s, t) {
                states[t].0 += 1;
            } else {
                states[t].1 += 1;
            }
            if t + 1 < h {
                let a = usize::from(panel.label(s, t));
                let b = usize::from(panel.label(s, t + 1));
                transitions[t][a][b] += 1;
            }
        }
    }
    EventFlow { states, transitions }
}

impl EventFlow {
    /// Sankey-ready rows: node counts then links.
    pub fn to_csv(&self) -> String {
        let name = |x: usize| if x == 1 { "event" } else { "no_event" };
        let mut out = String::from("kind,timestep,state,next_state,count\n");
        for (t, (e, n)) in self.states.iter().enumerate() {
            out.push_str(&format!("node,{t},event,,{e}\nnode,{t},no_event,,{n}\n"));
        }
        for (t, m) in self.transitions.iter().enumerate() {
            for a in [1, 0] {
                for b in [1, 0] {
                    out.push_str(&format!("link,{t},{},{},{}\n", name(a), name(b), m[a][b]));
                }
            }
        }
        out
    }
}
