//! Exact dynamic program over one generator's schedules.
//!
//! The state per mode is on/off plus the periods spent in that state,
//! capped at the minimum up (on) or down (off) time. Transitions enforce the
//! same rules as the scheduling rows.

use crate::formulation::{local_index, Kind};
use crate::model::{Generator, Schedule};

/// Largest joint state space solved by the dynamic program.
pub const MAX_STATES: usize = 1 << 14;
const MAX_MODES: usize = 8;

#[derive(Debug, Clone, Copy)]
struct ModeState {
    on: bool,
    dur: usize,
}

#[derive(Debug)]
pub struct ScheduleDp {
    modes: usize,
    horizon: usize,
    up: Vec<usize>,
    down: Vec<usize>,
    support: Vec<Option<usize>>,
    base: Vec<bool>,
    fix: Vec<Vec<Option<bool>>>,
    radix: Vec<usize>,
    states: usize,
    start: usize,
    /// `next[s * choices + c]`, `u32::MAX` when the choice is not allowed.
    next: Vec<u32>,
    /// On/off bit mask of every joint state.
    mask: Vec<u32>,
}

impl ScheduleDp {
    /// `None` when the joint state space is too large.
    pub fn new(gen: &Generator, horizon: usize) -> Option<Self> {
        let modes = gen.num_modes();
        if modes == 0 || modes > MAX_MODES {
            return None;
        }
        let up: Vec<usize> = gen.modes.iter().map(|m| m.min_up.max(1)).collect();
        let down: Vec<usize> = gen.modes.iter().map(|m| m.min_down.max(1)).collect();
        let radix: Vec<usize> = up.iter().zip(&down).map(|(u, d)| u + d).collect();
        let mut states = 1usize;
        for &r in &radix {
            states = states.checked_mul(r)?;
            if states > MAX_STATES {
                return None;
            }
        }
        let support: Vec<Option<usize>> = gen.modes.iter().map(|m| m.supporting_mode).collect();
        let base: Vec<bool> = gen.modes.iter().map(|m| m.is_base()).collect();
        let fix = (0..modes)
            .map(|m| (0..horizon).map(|t| gen.initial_fixing(m, t)).collect())
            .collect();
        let online = gen.initially_online();
        let mut dp = ScheduleDp {
            modes,
            horizon,
            up,
            down,
            support,
            base,
            fix,
            radix,
            states,
            start: 0,
            next: Vec::new(),
            mask: Vec::new(),
        };
        let init: Vec<ModeState> = (0..modes)
            .map(|m| ModeState {
                on: online[m],
                dur: if online[m] { dp.up[m] } else { dp.down[m] },
            })
            .collect();
        dp.start = dp.encode(&init);
        dp.build_tables();
        Some(dp)
    }

    fn encode(&self, st: &[ModeState]) -> usize {
        let mut code = 0;
        for m in (0..self.modes).rev() {
            let local = if st[m].on {
                st[m].dur - 1
            } else {
                self.up[m] + st[m].dur - 1
            };
            code = code * self.radix[m] + local;
        }
        code
    }

    fn decode(&self, mut code: usize) -> Vec<ModeState> {
        let mut out = Vec::with_capacity(self.modes);
        for m in 0..self.modes {
            let local = code % self.radix[m];
            code /= self.radix[m];
            out.push(if local < self.up[m] {
                ModeState { on: true, dur: local + 1 }
            } else {
                ModeState {
                    on: false,
                    dur: local - self.up[m] + 1,
                }
            });
        }
        out
    }

    fn build_tables(&mut self) {
        let choices = 1usize << self.modes;
        self.next = vec![u32::MAX; self.states * choices];
        self.mask = vec![0; self.states];
        for s in 0..self.states {
            let cur = self.decode(s);
            self.mask[s] = cur.iter().enumerate().map(|(m, st)| (st.on as u32) << m).sum();
            'choice: for c in 0..choices {
                let on = |m: usize| c >> m & 1 == 1;
                let mut nxt = Vec::with_capacity(self.modes);
                let mut bases = 0;
                for m in 0..self.modes {
                    let (was, now) = (cur[m].on, on(m));
                    if was && !now && cur[m].dur < self.up[m] {
                        continue 'choice;
                    }
                    if !was && now && cur[m].dur < self.down[m] {
                        continue 'choice;
                    }
                    if let Some(sup) = self.support[m] {
                        let sup_start = !cur[sup].on && on(sup);
                        if !was && now && !on(sup) {
                            continue 'choice;
                        }
                        if now && sup_start {
                            continue 'choice;
                        }
                    }
                    if now && self.base[m] {
                        bases += 1;
                    }
                    let cap = if now { self.up[m] } else { self.down[m] };
                    let dur = if was == now { (cur[m].dur + 1).min(cap) } else { 1 };
                    nxt.push(ModeState { on: now, dur });
                }
                if bases > 1 {
                    continue;
                }
                self.next[s * choices + c] = self.encode(&nxt) as u32;
            }
        }
    }

    fn step_cost(&self, pi: &[f64], t: usize, from: u32, c: usize) -> f64 {
        let mut v = 0.0;
        for m in 0..self.modes {
            let was = from >> m & 1 == 1;
            let now = c >> m & 1 == 1;
            if now {
                v -= pi[local_index(self.horizon, m, t, Kind::Commit)];
            }
            if now && !was {
                v -= pi[local_index(self.horizon, m, t, Kind::Start)];
            }
            if was && !now {
                v -= pi[local_index(self.horizon, m, t, Kind::Stop)];
            }
        }
        v
    }

    fn allowed(&self, t: usize) -> Vec<bool> {
        (0..1usize << self.modes)
            .map(|c| (0..self.modes).all(|m| self.fix[m][t].map_or(true, |f| f == (c >> m & 1 == 1))))
            .collect()
    }

    fn schedule_from_masks(&self, generator: usize, masks: &[u32]) -> Schedule {
        let mut sched = Schedule::all_off(generator, self.modes, self.horizon);
        let online = self.mask[self.start];
        for m in 0..self.modes {
            let mut prev = online >> m & 1 == 1;
            for (t, mask) in masks.iter().enumerate() {
                let i = sched.idx(m, t);
                let cur = mask >> m & 1 == 1;
                sched.u[i] = cur;
                sched.v[i] = cur && !prev;
                sched.w[i] = !cur && prev;
                prev = cur;
            }
        }
        sched
    }

    /// Every schedule whose value `-pi^T x` is within `slack` of the
    /// minimum, or `None` when there are more than `limit` of them.
    pub fn enumerate(&self, generator: usize, pi: &[f64], slack: f64, limit: usize) -> Option<Vec<Schedule>> {
        let (horizon, states) = (self.horizon, self.states);
        let choices = 1usize << self.modes;
        let allowed: Vec<Vec<bool>> = (0..horizon).map(|t| self.allowed(t)).collect();
        // to_go[t * states + s]: cheapest completion of periods t.. from s
        let mut to_go = vec![0.0; (horizon + 1) * states];
        for t in (0..horizon).rev() {
            for s in 0..states {
                let mut best = f64::INFINITY;
                for (c, &ok) in allowed[t].iter().enumerate() {
                    let n = self.next[s * choices + c];
                    if ok && n != u32::MAX {
                        let v = self.step_cost(pi, t, self.mask[s], c) + to_go[(t + 1) * states + n as usize];
                        best = best.min(v);
                    }
                }
                to_go[t * states + s] = best;
            }
        }
        let min = to_go[self.start];
        if !min.is_finite() {
            return None;
        }
        let budget = min + slack;
        let mut out = Vec::new();
        let mut masks = Vec::with_capacity(horizon);
        // depth-first search over choice sequences that can stay within budget
        let mut stack: Vec<(usize, usize, f64, usize)> = vec![(0, self.start, 0.0, 0)];
        while let Some((t, s, acc, c0)) = stack.pop() {
            masks.truncate(t);
            if t == horizon {
                out.push(self.schedule_from_masks(generator, &masks));
                if out.len() > limit {
                    return None;
                }
                continue;
            }
            for c in c0..choices {
                let n = self.next[s * choices + c];
                if !allowed[t][c] || n == u32::MAX {
                    continue;
                }
                let v = acc + self.step_cost(pi, t, self.mask[s], c);
                if v + to_go[(t + 1) * states + n as usize] <= budget {
                    stack.push((t, s, acc, c + 1));
                    stack.push((t + 1, n as usize, v, 0));
                    masks.push(self.mask[n as usize]);
                    break;
                }
            }
        }
        Some(out)
    }

    /// Schedule minimizing `-pi^T x`, with ties broken toward the lowest
    /// choice code at each period.
    pub fn solve(&self, generator: usize, pi: &[f64]) -> Option<Schedule> {
        let horizon = self.horizon;
        let mut cost = vec![f64::INFINITY; self.states];
        cost[self.start] = 0.0;
        let mut back = vec![u32::MAX; self.states * horizon];
        for t in 0..horizon {
            let allowed = self.allowed(t);
            let mut next_cost = vec![f64::INFINITY; self.states];
            for s in 0..self.states {
                let base = cost[s];
                if !base.is_finite() {
                    continue;
                }
                for (c, ok) in allowed.iter().enumerate() {
                    if !ok {
                        continue;
                    }
                    let n = self.next[s * allowed.len() + c];
                    if n == u32::MAX {
                        continue;
                    }
                    let v = base + self.step_cost(pi, t, self.mask[s], c);
                    let n = n as usize;
                    if v < next_cost[n] {
                        next_cost[n] = v;
                        back[t * self.states + n] = s as u32;
                    }
                }
            }
            cost = next_cost;
        }
        let mut best = None;
        for (s, &v) in cost.iter().enumerate() {
            if v.is_finite() && best.map_or(true, |(_, b)| v < b) {
                best = Some((s, v));
            }
        }
        let (mut s, _) = best?;
        let mut masks = vec![0u32; horizon];
        for t in (0..horizon).rev() {
            masks[t] = self.mask[s];
            s = back[t * self.states + s] as usize;
        }
        Some(self.schedule_from_masks(generator, &masks))
    }
}
