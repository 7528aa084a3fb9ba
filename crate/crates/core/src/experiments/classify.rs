use std::fmt;
use std::path::Path;

use super::rri::RriTrial;
use super::ExperimentError;
use crate::numerics::std_dev;

/// Thresholds are in normalized joint units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifierConfig {
    /// Number of trailing steps examined.
    pub window: usize,
    /// Every DoF below this standard deviation means a fixed point.
    pub fixed_point_std: f64,
    /// Autocorrelation a periodic peak must reach.
    pub peak: f64,
    pub min_lag: usize,
    /// Slack in steps when looking for peaks at multiples of the period.
    pub tolerance: usize,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            window: 500,
            fixed_point_std: 0.01,
            peak: 0.9,
            min_lag: 4,
            tolerance: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DynamicsLabel {
    FixedPoint,
    LimitCycle { period: usize },
    Emergent,
}

impl DynamicsLabel {
    pub fn name(&self) -> &'static str {
        match self {
            DynamicsLabel::FixedPoint => "fixed_point",
            DynamicsLabel::LimitCycle { .. } => "limit_cycle",
            DynamicsLabel::Emergent => "emergent",
        }
    }

    pub fn period(&self) -> Option<usize> {
        match self {
            DynamicsLabel::LimitCycle { period } => Some(*period),
            _ => None,
        }
    }

    /// Label of a coupled pair: any emergent agent makes the pair emergent,
    /// otherwise any cycling agent makes it a limit cycle.
    pub fn joint(a: DynamicsLabel, b: DynamicsLabel) -> DynamicsLabel {
        use DynamicsLabel::*;
        match (a, b) {
            (Emergent, _) | (_, Emergent) => Emergent,
            (LimitCycle { period }, _) | (_, LimitCycle { period }) => LimitCycle { period },
            _ => FixedPoint,
        }
    }
}

impl fmt::Display for DynamicsLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.period() {
            Some(p) => write!(f, "{}({p})", self.name()),
            None => f.write_str(self.name()),
        }
    }
}

/// Autocorrelation pooled over channels: each DoF contributes the covariance of
/// its overlapping segments `x[..n-lag]` and `x[lag..]`, each centered on its own
/// mean, normalized by the pooled segment variances. Constant channels add nothing.
///
/// Returns `None` when the pooled variance vanishes.
pub fn pooled_autocorrelation(traj: &[f64], dof: usize, lag: usize) -> Option<f64> {
    let n = traj.len() / dof;
    if lag >= n {
        return None;
    }
    let m = n - lag;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for j in 0..dof {
        let a = |t: usize| traj[t * dof + j];
        let b = |t: usize| traj[(t + lag) * dof + j];
        let ma = (0..m).map(a).sum::<f64>() / m as f64;
        let mb = (0..m).map(b).sum::<f64>() / m as f64;
        for t in 0..m {
            let (da, db) = (a(t) - ma, b(t) - mb);
            sab += da * db;
            saa += da * da;
            sbb += db * db;
        }
    }
    let den = (saa * sbb).sqrt();
    (den > 0.0).then(|| (sab / den).clamp(-1.0, 1.0))
}

/// Labels the last `cfg.window` steps of a step-major `steps x dof` trajectory.
pub fn classify_dynamics(
    traj: &[f64],
    dof: usize,
    cfg: &ClassifierConfig,
) -> Result<DynamicsLabel, ExperimentError> {
    let steps = traj.len() / dof;
    if steps < cfg.window || cfg.window == 0 {
        return Err(ExperimentError::TooShort {
            need: cfg.window.max(1),
            got: steps,
        });
    }
    let tail = &traj[(steps - cfg.window) * dof..];
    let still = (0..dof).all(|j| {
        let ch: Vec<f64> = tail.iter().skip(j).step_by(dof).copied().collect();
        std_dev(&ch) < cfg.fixed_point_std
    });
    if still {
        return Ok(DynamicsLabel::FixedPoint);
    }

    let max_lag = cfg.window / 2;
    let min_lag = cfg.min_lag.max(1);
    let r: Vec<f64> = (0..=max_lag + 1)
        .map(|l| pooled_autocorrelation(tail, dof, l).unwrap_or(0.0))
        .collect();
    let near = |center: usize| {
        let lo = center.saturating_sub(cfg.tolerance).max(1);
        let hi = (center + cfg.tolerance).min(max_lag + 1);
        (lo..=hi).map(|l| r[l]).fold(f64::NEG_INFINITY, f64::max)
    };
    for p in min_lag..=max_lag {
        let peak = r[p] >= cfg.peak && r[p] >= r[p - 1] && r[p] >= r[p + 1];
        if !peak {
            continue;
        }
        let recurs = (2..)
            .map(|k| k * p)
            .take_while(|&l| l <= max_lag)
            .all(|l| near(l) >= cfg.peak);
        if recurs {
            return Ok(DynamicsLabel::LimitCycle { period: p });
        }
    }
    Ok(DynamicsLabel::Emergent)
}

/// Parses a `step,p0..p<dof-1>` trajectory file; returns the values and the DoF count.
pub fn read_trajectory_csv(text: &str, file: &Path) -> Result<(Vec<f64>, usize), ExperimentError> {
    let err = |line: usize, message: String| ExperimentError::Parse {
        file: file.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    let header = lines.next().map(|(_, h)| h).unwrap_or("");
    let cols: Vec<&str> = header.split(',').collect();
    let dof = cols.len().saturating_sub(1);
    let expected: Vec<String> = std::iter::once("step".to_string())
        .chain((0..dof).map(|j| format!("p{j}")))
        .collect();
    if dof == 0 || cols != expected {
        return Err(err(1, format!("expected header step,p0..p<n>, found {header:?}")));
    }
    let mut values = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dof + 1 {
            return Err(err(i + 1, format!("expected {} fields, found {}", dof + 1, fields.len())));
        }
        for f in &fields[1..] {
            values.push(
                f.trim()
                    .parse::<f64>()
                    .map_err(|_| err(i + 1, format!("invalid number {f:?}")))?,
            );
        }
    }
    Ok((values, dof))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LabelCounts {
    pub fixed_point: usize,
    pub limit_cycle: usize,
    pub emergent: usize,
}

impl LabelCounts {
    pub fn add(&mut self, label: DynamicsLabel) {
        match label {
            DynamicsLabel::FixedPoint => self.fixed_point += 1,
            DynamicsLabel::LimitCycle { .. } => self.limit_cycle += 1,
            DynamicsLabel::Emergent => self.emergent += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.fixed_point + self.limit_cycle + self.emergent
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub trial: usize,
    /// `A`, `B` or `joint`.
    pub agent: &'static str,
    pub label: DynamicsLabel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RriSummary {
    pub rows: Vec<SummaryRow>,
    pub agent_a: LabelCounts,
    pub agent_b: LabelCounts,
    pub joint: LabelCounts,
}

impl RriSummary {
    /// `trial,agent,label,period_if_any`
    pub fn to_csv(&self) -> String {
        let mut s = String::from("trial,agent,label,period_if_any\n");
        for r in &self.rows {
            let period = r.label.period().map(|p| p.to_string()).unwrap_or_default();
            s.push_str(&format!("{},{},{},{}\n", r.trial, r.agent, r.label.name(), period));
        }
        s
    }

    pub fn render(&self) -> String {
        let line = |name: &str, c: &LabelCounts| {
            format!(
                "{name:<6} fixed_point {:>3}  limit_cycle {:>3}  emergent {:>3}\n",
                c.fixed_point, c.limit_cycle, c.emergent
            )
        };
        line("A", &self.agent_a) + &line("B", &self.agent_b) + &line("joint", &self.joint)
    }
}

/// Labels both agents of every trial plus the pair.
pub fn summarize_rri(trials: &[RriTrial], cfg: &ClassifierConfig) -> Result<RriSummary, ExperimentError> {
    let mut summary = RriSummary {
        rows: Vec::with_capacity(3 * trials.len()),
        agent_a: LabelCounts::default(),
        agent_b: LabelCounts::default(),
        joint: LabelCounts::default(),
    };
    for t in trials {
        let a = classify_dynamics(&t.agents[0].actions, t.dof, cfg)?;
        let b = classify_dynamics(&t.agents[1].actions, t.dof, cfg)?;
        let j = DynamicsLabel::joint(a, b);
        summary.agent_a.add(a);
        summary.agent_b.add(b);
        summary.joint.add(j);
        for (agent, label) in [("A", a), ("B", b), ("joint", j)] {
            summary.rows.push(SummaryRow {
                trial: t.trial,
                agent,
                label,
            });
        }
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::derive_stream;
    use std::f64::consts::PI;

    const DOF: usize = 6;

    fn planted(steps: usize, mut f: impl FnMut(usize, usize) -> f64) -> Vec<f64> {
        (0..steps).flat_map(|t| (0..DOF).map(move |j| (t, j))).map(|(t, j)| f(t, j)).collect()
    }

    fn sinusoid(period: f64) -> Vec<f64> {
        planted(600, |t, _| 0.5 * (2.0 * PI * t as f64 / period).sin())
    }

    #[test]
    fn constant_is_fixed_point() {
        let x = planted(600, |_, j| 0.1 * j as f64);
        assert_eq!(classify_dynamics(&x, DOF, &ClassifierConfig::default()).unwrap(), DynamicsLabel::FixedPoint);
    }

    #[test]
    fn sinusoid_is_limit_cycle_with_its_period() {
        let cfg = ClassifierConfig::default();
        assert_eq!(classify_dynamics(&sinusoid(25.0), DOF, &cfg).unwrap(), DynamicsLabel::LimitCycle { period: 25 });
        // Brute-force oracle for the pooled peak.
        let x = sinusoid(25.0);
        let tail: Vec<f64> = x[100 * DOF..].iter().step_by(DOF).copied().collect();
        let (a, b) = (&tail[..475], &tail[25..]);
        let (ma, mb) = (a.iter().sum::<f64>() / 475.0, b.iter().sum::<f64>() / 475.0);
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let den = (a.iter().map(|x| (x - ma).powi(2)).sum::<f64>() * b.iter().map(|y| (y - mb).powi(2)).sum::<f64>()).sqrt();
        let r = pooled_autocorrelation(&x[100 * DOF..], DOF, 25).unwrap();
        assert!((r - num / den).abs() < 1e-12 && r >= 0.99);
    }

    #[test]
    fn logistic_map_is_emergent() {
        let mut x: Vec<f64> = (0..DOF).map(|j| 0.1 + 0.13 * j as f64).collect();
        let traj = planted(600, |_, j| {
            let v = 2.0 * x[j] - 1.0;
            x[j] = 3.9 * x[j] * (1.0 - x[j]);
            v
        });
        assert_eq!(classify_dynamics(&traj, DOF, &ClassifierConfig::default()).unwrap(), DynamicsLabel::Emergent);
    }

    #[test]
    fn too_short_is_an_error() {
        let x = planted(100, |_, _| 0.0);
        assert!(matches!(
            classify_dynamics(&x, DOF, &ClassifierConfig::default()),
            Err(ExperimentError::TooShort { need: 500, got: 100 })
        ));
    }

    #[test]
    fn offset_and_scale_invariance() {
        let cfg = ClassifierConfig::default();
        let mut rng = derive_stream(3, 3);
        let base: Vec<f64> = sinusoid(37.0).iter().map(|v| v + 0.01 * rng.normal::<f64>()).collect();
        let label = classify_dynamics(&base, DOF, &cfg).unwrap();
        for (a, b) in [(1.0, 0.3), (0.5, -0.2), (1.7, 0.0)] {
            let y: Vec<f64> = base.iter().map(|v| a * v + b).collect();
            assert_eq!(classify_dynamics(&y, DOF, &cfg).unwrap(), label);
        }
    }

    #[test]
    fn joint_label_precedence() {
        use DynamicsLabel::*;
        assert_eq!(DynamicsLabel::joint(FixedPoint, FixedPoint), FixedPoint);
        assert_eq!(DynamicsLabel::joint(FixedPoint, LimitCycle { period: 9 }), LimitCycle { period: 9 });
        assert_eq!(DynamicsLabel::joint(LimitCycle { period: 9 }, Emergent), Emergent);
    }

    #[test]
    fn trajectory_csv_parses() {
        let text = "step,p0,p1\n0,0.5,-1\n1,0.25,1e-3\n";
        let (v, dof) = read_trajectory_csv(text, Path::new("t.csv")).unwrap();
        assert_eq!(dof, 2);
        assert_eq!(v, vec![0.5, -1.0, 0.25, 1e-3]);
        assert!(read_trajectory_csv("step,p0\n0,x\n", Path::new("t.csv")).is_err());
        assert!(read_trajectory_csv("step,q0\n", Path::new("t.csv")).is_err());
    }
}
