use std::collections::BTreeMap;
use std::sync::Arc;

use super::{DenseSolver, Eigensolver, LanczosSolver, SolveError, SolveOptions, SpectralResult};
use crate::discretize::DiscreteOperator;

/// Dense below `threshold` grid points, Lanczos above.
#[derive(Debug, Clone, Copy)]
pub struct AutoSolver {
    pub threshold: usize,
}

impl Default for AutoSolver {
    fn default() -> Self {
        Self { threshold: 512 }
    }
}

impl Eigensolver for AutoSolver {
    fn name(&self) -> &'static str {
        "auto"
    }

    fn smallest(&self, op: &DiscreteOperator, k: usize, opts: &SolveOptions) -> Result<SpectralResult, SolveError> {
        if op.size() <= self.threshold {
            DenseSolver::default().smallest(op, k, opts)
        } else {
            LanczosSolver.smallest(op, k, opts)
        }
    }
}

#[derive(Clone)]
pub struct SolverRegistry {
    solvers: BTreeMap<&'static str, Arc<dyn Eigensolver>>,
}

impl SolverRegistry {
    pub fn empty() -> Self {
        Self { solvers: BTreeMap::new() }
    }

    /// `dense`, `lanczos` and `auto`.
    pub fn builtin() -> Self {
        let mut reg = Self::empty();
        reg.register(Arc::new(DenseSolver::default()));
        reg.register(Arc::new(LanczosSolver));
        reg.register(Arc::new(AutoSolver::default()));
        reg
    }

    pub fn register(&mut self, solver: Arc<dyn Eigensolver>) {
        self.solvers.insert(solver.name(), solver);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.solvers.keys().copied()
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Eigensolver>, SolveError> {
        self.solvers.get(name).cloned().ok_or_else(|| SolveError::UnknownSolver {
            name: name.to_string(),
            known: self.names().collect::<Vec<_>>().join(", "),
        })
    }
}

impl Default for SolverRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}
