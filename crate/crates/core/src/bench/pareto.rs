use serde::{Deserialize, Serialize};

use crate::dataio::format_float;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub name: String,
    pub accuracy: f64,
    pub latency_ms: f64,
}

impl ParetoPoint {
    pub fn new(name: impl Into<String>, accuracy: f64, latency_ms: f64) -> Self {
        Self {
            name: name.into(),
            accuracy,
            latency_ms,
        }
    }

    /// At least as accurate and as fast, and strictly better in one.
    fn dominates(&self, other: &Self) -> bool {
        self.accuracy >= other.accuracy
            && self.latency_ms <= other.latency_ms
            && (self.accuracy > other.accuracy || self.latency_ms < other.latency_ms)
    }
}

/// Points no other point dominates, in input order.
pub fn pareto_points(points: &[ParetoPoint]) -> Vec<ParetoPoint> {
    points
        .iter()
        .filter(|p| !points.iter().any(|q| q.dominates(p)))
        .cloned()
        .collect()
}

/// `name,accuracy,latency_ms,on_frontier`, one row per input point.
pub fn pareto_csv(points: &[ParetoPoint]) -> String {
    let front = pareto_points(points);
    let mut out = String::from("name,accuracy,latency_ms,on_frontier\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{}\n",
            p.name,
            format_float(p.accuracy),
            format_float(p.latency_ms),
            front.contains(p)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dominance_by_hand() {
        let pts = [
            ParetoPoint::new("A", 0.96, 70.0),
            ParetoPoint::new("B", 0.95, 10.0),
            ParetoPoint::new("C", 0.94, 50.0),
        ];
        let names: Vec<_> = pareto_points(&pts).into_iter().map(|p| p.name).collect();
        assert_eq!(names, ["A", "B"]);
    }

    #[test]
    fn trivial_fronts() {
        let one = [ParetoPoint::new("A", 0.5, 1.0)];
        assert_eq!(pareto_points(&one), one.to_vec());
        let twins = [ParetoPoint::new("A", 0.5, 1.0), ParetoPoint::new("B", 0.5, 1.0)];
        assert_eq!(pareto_points(&twins).len(), 2);
    }

    #[test]
    fn csv_rows() {
        let pts = [ParetoPoint::new("A", 0.5, 2.0), ParetoPoint::new("B", 0.4, 3.0)];
        assert_eq!(
            pareto_csv(&pts),
            "name,accuracy,latency_ms,on_frontier\nA,0.500000000,2.00000000,true\nB,0.400000000,3.00000000,false\n"
        );
    }
}
