use std::io::Write;
use std::time::Duration;

use crate::error::Result;

/// One coordinate-ascent cycle.
#[derive(Clone, Debug, PartialEq)]
pub struct CycleRecord {
    /// 1-based cycle number.
    pub cycle: usize,
    /// Improvement gap of every agent (exact or estimated).
    pub gaps: Vec<f64>,
    /// Agent whose policy was replaced, `None` on the terminating cycle.
    pub selected: Option<usize>,
    /// Exact reward values of the policy in force after the cycle.
    pub reward_values: Vec<f64>,
    /// Exact cost values of the policy in force after the cycle.
    pub cost_values: Vec<f64>,
    pub elapsed: Duration,
    pub episodes: u64,
    pub steps: u64,
    pub draws: u64,
}

/// Append-only record of a coordinate-ascent run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunTrace {
    pub n_agents: usize,
    pub thresholds: Vec<f64>,
    pub initial_rewards: Vec<f64>,
    pub initial_costs: Vec<f64>,
    pub cycles: Vec<CycleRecord>,
    pub converged: bool,
}

impl RunTrace {
    pub(crate) fn new(
        n_agents: usize,
        thresholds: Vec<f64>,
        rewards: Vec<f64>,
        costs: Vec<f64>,
    ) -> Self {
        Self {
            n_agents,
            thresholds,
            initial_rewards: rewards,
            initial_costs: costs,
            cycles: Vec::new(),
            converged: false,
        }
    }

    /// Number of cycles that replaced a policy.
    pub fn accepted_updates(&self) -> usize {
        self.cycles.iter().filter(|c| c.selected.is_some()).count()
    }

    pub fn total_episodes(&self) -> u64 {
        self.cycles.iter().map(|c| c.episodes).sum()
    }

    pub fn total_steps(&self) -> u64 {
        self.cycles.iter().map(|c| c.steps).sum()
    }

    pub fn total_draws(&self) -> u64 {
        self.cycles.iter().map(|c| c.draws).sum()
    }

    /// Costs after each cycle, preceded by the initial costs.
    pub fn cost_curve(&self) -> Vec<Vec<f64>> {
        std::iter::once(self.initial_costs.clone())
            .chain(self.cycles.iter().map(|c| c.cost_values.clone()))
            .collect()
    }

    /// Largest cost-threshold excess over the run, including the start.
    pub fn max_violation(&self) -> f64 {
        self.cost_curve()
            .iter()
            .flat_map(|costs| costs.iter().zip(&self.thresholds).map(|(c, a)| c - a))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn first_cost(costs: &[f64]) -> String {
        costs.first().map_or_else(String::new, |c| c.to_string())
    }

    /// One row per cycle and agent:
    /// `cycle,agent,gap,selected,V_c,V_r_agent0..,episodes_used`.
    pub fn write_run_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "cycle,agent,gap,selected,V_c")?;
        for i in 0..self.n_agents {
            write!(w, ",V_r_agent{i}")?;
        }
        writeln!(w, ",episodes_used")?;
        let mut episodes = 0;
        for c in &self.cycles {
            episodes += c.episodes;
            for (i, gap) in c.gaps.iter().enumerate() {
                write!(
                    w,
                    "{},{i},{gap},{},{}",
                    c.cycle,
                    u8::from(c.selected == Some(i)),
                    Self::first_cost(&c.cost_values)
                )?;
                for v in &c.reward_values {
                    write!(w, ",{v}")?;
                }
                writeln!(w, ",{episodes}")?;
            }
        }
        Ok(())
    }

    /// `cycle,V_c` starting with cycle 0 for the initial policy.
    pub fn write_cost_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "cycle,V_c")?;
        writeln!(w, "0,{}", Self::first_cost(&self.initial_costs))?;
        for c in &self.cycles {
            writeln!(w, "{},{}", c.cycle, Self::first_cost(&c.cost_values))?;
        }
        Ok(())
    }

    /// `cycle,max_gap,gap_agent0..`.
    pub fn write_gap_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "cycle,max_gap")?;
        for i in 0..self.n_agents {
            write!(w, ",gap_agent{i}")?;
        }
        writeln!(w)?;
        for c in &self.cycles {
            let max = c.gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            write!(w, "{},{max}", c.cycle)?;
            for g in &c.gaps {
                write!(w, ",{g}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunTrace {
        let mut t = RunTrace::new(2, vec![0.5], vec![0.1, 0.1], vec![0.2]);
        t.cycles.push(CycleRecord {
            cycle: 1,
            gaps: vec![0.3, 0.1],
            selected: Some(0),
            reward_values: vec![0.4, 0.4],
            cost_values: vec![0.5],
            elapsed: Duration::from_millis(3),
            episodes: 10,
            steps: 20,
            draws: 0,
        });
        t.cycles.push(CycleRecord {
            cycle: 2,
            gaps: vec![0.0, 0.0],
            selected: None,
            reward_values: vec![0.4, 0.4],
            cost_values: vec![0.5],
            elapsed: Duration::from_millis(3),
            episodes: 10,
            steps: 20,
            draws: 0,
        });
        t
    }

    #[test]
    fn csv_layouts() {
        let t = sample();
        let mut buf = Vec::new();
        t.write_run_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(
            lines[0],
            "cycle,agent,gap,selected,V_c,V_r_agent0,V_r_agent1,episodes_used"
        );
        assert_eq!(lines[1], "1,0,0.3,1,0.5,0.4,0.4,10");
        assert_eq!(lines[4], "2,1,0,0,0.5,0.4,0.4,20");
        let mut buf = Vec::new();
        t.write_cost_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "cycle,V_c\n0,0.2\n1,0.5\n2,0.5\n"
        );
        let mut buf = Vec::new();
        t.write_gap_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "cycle,max_gap,gap_agent0,gap_agent1\n1,0.3,0.3,0.1\n2,0,0,0\n"
        );
    }

    #[test]
    fn ledger_totals() {
        let t = sample();
        assert_eq!(t.accepted_updates(), 1);
        assert_eq!(t.total_episodes(), 20);
        assert_eq!(t.total_steps(), 40);
        assert!((t.max_violation() - 0.0).abs() < 1e-15);
    }
}
