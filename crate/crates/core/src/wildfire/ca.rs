use nalgebra::DVector;

use super::rates::{neighbor_distance, SpreadRates, DIRECTIONS};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellStatus {
    Unburned,
    Burning,
    BurnedDown,
}

/// Grid state of the automaton after `step` steps of length `dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct FireState {
    nx: usize,
    ny: usize,
    cell_length: f64,
    dt: f64,
    step: usize,
    status: Vec<CellStatus>,
    ignition_step: Vec<Option<usize>>,
    dist: Vec<[f64; 8]>,
}

impl FireState {
    /// Unburned grid at step 0.
    pub fn new(nx: usize, ny: usize, cell_length: f64, dt: f64) -> Self {
        let n = nx * ny;
        Self {
            nx,
            ny,
            cell_length,
            dt,
            step: 0,
            status: vec![CellStatus::Unburned; n],
            ignition_step: vec![None; n],
            dist: vec![[0.0; 8]; n],
        }
    }

    /// Sets an unburned cell burning at the current step with no accumulated spread.
    pub fn ignite(&mut self, cell: usize) {
        if self.status[cell] == CellStatus::Unburned {
            self.status[cell] = CellStatus::Burning;
            self.ignition_step[cell] = Some(self.step);
            self.dist[cell] = [0.0; 8];
        }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn n_cells(&self) -> usize {
        self.status.len()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.dt
    }

    pub fn status(&self, cell: usize) -> CellStatus {
        self.status[cell]
    }

    pub fn ignition_step(&self, cell: usize) -> Option<usize> {
        self.ignition_step[cell]
    }

    pub fn ignition_time(&self, cell: usize) -> Option<f64> {
        self.ignition_step[cell].map(|s| s as f64 * self.dt)
    }

    /// Accumulated spread distance per direction.
    pub fn distances(&self, cell: usize) -> &[f64; 8] {
        &self.dist[cell]
    }

    pub fn ignited_count(&self) -> usize {
        self.ignition_step.iter().filter(|s| s.is_some()).count()
    }

    /// Cells currently in the burning state, in index order.
    pub fn burning_cells(&self) -> Vec<usize> {
        (0..self.n_cells()).filter(|&c| self.status[c] == CellStatus::Burning).collect()
    }

    fn neighbor(&self, cell: usize, k: usize) -> Option<usize> {
        let (di, dj) = DIRECTIONS[k];
        let i = (cell % self.nx) as i64 + di;
        let j = (cell / self.nx) as i64 + dj;
        (i >= 0 && j >= 0 && (i as usize) < self.nx && (j as usize) < self.ny).then(|| j as usize * self.nx + i as usize)
    }

    /// `s = (t − t^I)/t` for ignited cells, 0 elsewhere, at the current time.
    pub fn state_vector(&self) -> DVector<f64> {
        extract_state_vector(self, self.time()).expect("state vector requested at t = 0")
    }
}

/// Continuous state `s` at time `t`, row-major.
pub fn extract_state_vector(state: &FireState, t: f64) -> Result<DVector<f64>> {
    if !(t > 0.0) {
        return Err(Error::validation(format!("state time must be positive, got {t}")));
    }
    Ok(DVector::from_iterator(
        state.n_cells(),
        state.ignition_step.iter().map(|s| match s {
            Some(s) => ((t - *s as f64 * state.dt) / t).clamp(0.0, 1.0),
            None => 0.0,
        }),
    ))
}

/// Prescribed ignition steps used when rebuilding a state from `s` values.
struct Schedule {
    by_step: Vec<Vec<usize>>,
    step_of: Vec<Option<usize>>,
}

/// Advances one synchronous step.
pub fn step_fire(state: &mut FireState, rates: &SpreadRates) {
    advance(state, rates, None);
}

fn advance(state: &mut FireState, rates: &SpreadRates, schedule: Option<&Schedule>) {
    let next = state.step + 1;
    let pre = state.status.clone();
    let reach: [f64; 8] = std::array::from_fn(|k| neighbor_distance(k, state.cell_length));
    // Spillover per target: largest excess and the directions attaining it.
    let mut spill: Vec<(usize, f64, u8)> = Vec::new();
    let mut slot: Vec<Option<usize>> = vec![None; pre.len()];

    for c in 0..pre.len() {
        if pre[c] != CellStatus::Burning {
            continue;
        }
        let rate = &rates.cells[c].rate;
        let mut surrounded = true;
        for k in 0..8 {
            state.dist[c][k] += rate[k] * state.dt;
            let Some(nb) = state.neighbor(c, k) else { continue };
            if pre[nb] != CellStatus::Unburned {
                continue;
            }
            surrounded = false;
            if schedule.is_some_and(|s| s.step_of[nb] != Some(next)) {
                continue;
            }
            let d = state.dist[c][k];
            if d < reach[k] {
                continue;
            }
            let excess = d - reach[k];
            match slot[nb] {
                None => {
                    slot[nb] = Some(spill.len());
                    spill.push((nb, excess, 1 << k));
                }
                Some(p) => {
                    let entry = &mut spill[p];
                    if excess > entry.1 {
                        *entry = (nb, excess, 1 << k);
                    } else if excess == entry.1 {
                        entry.2 |= 1 << k;
                    }
                }
            }
        }
        if surrounded {
            state.status[c] = CellStatus::BurnedDown;
        }
    }

    for (nb, excess, mask) in spill {
        state.status[nb] = CellStatus::Burning;
        state.ignition_step[nb] = Some(next);
        state.dist[nb] = std::array::from_fn(|k| if mask & (1 << k) != 0 { excess } else { 0.0 });
    }
    if let Some(s) = schedule {
        if let Some(cells) = s.by_step.get(next) {
            for &c in cells {
                if state.status[c] == CellStatus::Unburned {
                    state.status[c] = CellStatus::Burning;
                    state.ignition_step[c] = Some(next);
                    state.dist[c] = [0.0; 8];
                }
            }
        }
    }
    state.step = next;
}

/// Rebuilds the automaton state at step `steps` from a state vector `s` at `t = steps·dt`.
///
/// Each cell with `s > 0` is assigned the ignition step `round(steps·(1 − s))`,
/// capped at `steps − 1`. Steps before `steps` are replayed so that exactly
/// those cells ignite at those steps, with spread distances accumulated by the
/// usual rules; the final step runs freely, which recovers the cells that
/// ignited at `t` itself (their `s` is 0).
pub fn restore_state(s: &DVector<f64>, rates: &SpreadRates, cell_length: f64, dt: f64, steps: usize) -> Result<FireState> {
    let n = rates.nx * rates.ny;
    if s.len() != n {
        return Err(Error::Dimension(format!("state vector has length {} but the grid has {n} cells", s.len())));
    }
    if steps == 0 {
        return Err(Error::validation("cannot restore a state at step 0"));
    }
    if let Some(i) = s.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row: i, col: 0 });
    }
    let mut schedule = Schedule { by_step: vec![Vec::new(); steps], step_of: vec![None; n] };
    let k = steps as f64;
    for (c, &v) in s.iter().enumerate() {
        if v > 0.0 {
            let step = (k * (1.0 - v.min(1.0))).round().clamp(0.0, k - 1.0) as usize;
            schedule.step_of[c] = Some(step);
            schedule.by_step[step].push(c);
        }
    }
    let mut state = FireState::new(rates.nx, rates.ny, cell_length, dt);
    for &c in &schedule.by_step[0] {
        state.ignite(c);
    }
    for _ in 1..steps {
        advance(&mut state, rates, Some(&schedule));
    }
    advance(&mut state, rates, None);
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wildfire::rates::CellRates;

    fn uniform_rates(nx: usize, ny: usize, speed: f64, angle: f64) -> SpreadRates {
        SpreadRates { nx, ny, cells: vec![CellRates::new(speed, angle); nx * ny] }
    }

    #[test]
    fn windless_neighbors_ignite_on_step_52() {
        let rates = uniform_rates(5, 5, 0.0, 0.0);
        let mut st = FireState::new(5, 5, 10.0, 3600.0 / 92.0);
        st.ignite(12);
        for _ in 0..51 {
            step_fire(&mut st, &rates);
        }
        assert_eq!(st.ignited_count(), 1);
        step_fire(&mut st, &rates);
        for nb in [11, 13, 7, 17] {
            assert_eq!(st.ignition_step(nb), Some(52));
        }
        assert_eq!(st.ignited_count(), 5);
        // Spillover lands in the triggering direction only.
        let d = st.distances(13);
        let excess = 52.0 * 0.005 * 3600.0 / 92.0 - 10.0;
        assert!((d[0] - excess).abs() < 1e-12);
        assert!(d[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn empty_grid_is_a_fixed_point() {
        let rates = uniform_rates(4, 3, 2.0, 0.3);
        let mut st = FireState::new(4, 3, 10.0, 5.0);
        let before = st.clone();
        step_fire(&mut st, &rates);
        assert_eq!(st.step(), 1);
        assert_eq!(st.status, before.status);
        assert_eq!(st.dist, before.dist);
    }

    #[test]
    fn state_vector_values() {
        let mut st = FireState::new(3, 1, 10.0, 10.0);
        assert!(extract_state_vector(&st, 0.0).is_err());
        assert_eq!(extract_state_vector(&st, 5.0).unwrap(), DVector::zeros(3));
        st.ignite(0);
        st.step = 5;
        st.ignite(2);
        let s = extract_state_vector(&st, 100.0).unwrap();
        assert_eq!(s.as_slice(), &[1.0, 0.0, 0.5]);
    }

    #[test]
    fn burn_down_needs_all_neighbors() {
        let rates = uniform_rates(3, 3, 0.0, 0.0);
        let mut st = FireState::new(3, 3, 10.0, 2000.0);
        st.ignite(0);
        // Corner cell: three in-domain neighbors.
        step_fire(&mut st, &rates);
        assert_eq!(st.status(0), CellStatus::Burning);
        assert_eq!(st.ignited_count(), 3);
        step_fire(&mut st, &rates);
        step_fire(&mut st, &rates);
        assert_eq!(st.status(0), CellStatus::BurnedDown);
    }

    #[test]
    fn restore_round_trip_on_uniform_wind() {
        let rates = uniform_rates(30, 20, 2.5, 0.4);
        let dt = 10.0 / rates.max_rate() * 0.97;
        let mut truth = FireState::new(30, 20, 10.0, dt);
        truth.ignite(10 * 30 + 5);
        for _ in 0..40 {
            step_fire(&mut truth, &rates);
        }
        let s = truth.state_vector();
        let mut restored = restore_state(&s, &rates, 10.0, dt, 40).unwrap();
        assert_eq!(restored, truth);
        for _ in 0..40 {
            step_fire(&mut truth, &rates);
            step_fire(&mut restored, &rates);
        }
        assert_eq!(truth.state_vector(), restored.state_vector());
    }

    #[test]
    fn restore_rejects_bad_input() {
        let rates = uniform_rates(2, 2, 0.0, 0.0);
        assert!(restore_state(&DVector::zeros(3), &rates, 10.0, 1.0, 4).is_err());
        assert!(restore_state(&DVector::zeros(4), &rates, 10.0, 1.0, 0).is_err());
        let mut s = DVector::zeros(4);
        s[1] = f64::NAN;
        assert!(restore_state(&s, &rates, 10.0, 1.0, 4).is_err());
    }

    #[test]
    fn restored_cells_keep_their_steps() {
        let rates = uniform_rates(6, 6, 0.0, 0.0);
        let mut s = DVector::zeros(36);
        s[7] = 1.0;
        s[20] = 0.5;
        s[30] = 0.01;
        let st = restore_state(&s, &rates, 10.0, 1.0, 10).unwrap();
        assert_eq!(st.ignition_step(7), Some(0));
        assert_eq!(st.ignition_step(20), Some(5));
        assert_eq!(st.ignition_step(30), Some(9));
        assert_eq!(st.ignited_count(), 3);
    }
}
