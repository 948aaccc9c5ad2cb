//! Convergence history shared by the iterative solvers.

use std::fmt::Write as _;

/// Relative residuals `‖b − A x_i‖ / ‖b‖` indexed by iteration (or cycle).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResidualTrace {
    pub entries: Vec<(usize, f64)>,
    pub converged: bool,
    pub iterations_to_tol: Option<usize>,
    /// Set when the iteration stopped early without reaching the tolerance
    /// (e.g. a Krylov breakdown).
    pub stagnated: bool,
}

impl ResidualTrace {
    pub fn push(&mut self, iteration: usize, relative_residual: f64) {
        debug_assert!(self.entries.last().is_none_or(|&(i, _)| i < iteration));
        self.entries.push((iteration, relative_residual));
    }

    /// Records that `iteration` met the tolerance.
    pub fn mark_converged(&mut self, iteration: usize) {
        self.converged = true;
        self.iterations_to_tol = Some(iteration);
    }

    pub fn last_residual(&self) -> Option<f64> {
        self.entries.last().map(|e| e.1)
    }

    pub fn iterations(&self) -> usize {
        self.entries.last().map_or(0, |e| e.0)
    }

    /// `"<index_name>,relative_residual"` header plus one line per entry,
    /// values in shortest round-trip form.
    pub fn to_csv(&self, index_name: &str) -> String {
        let mut s = format!("{index_name},relative_residual\n");
        for (i, r) in &self.entries {
            writeln!(s, "{i},{r:e}").unwrap();
        }
        s
    }
}
