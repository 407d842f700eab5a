use super::FemError;

/// Uniform partition of the Lagrangian interval `[0, 1]` into `n` elements.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    n: usize,
    h: f64,
    nodes: Vec<f64>,
}

impl Mesh {
    pub fn new(n: usize) -> Result<Mesh, FemError> {
        if n < 2 {
            return Err(FemError::MeshTooCoarse(n));
        }
        let nodes = (0..=n).map(|i| i as f64 / n as f64).collect();
        Ok(Mesh {
            n,
            h: 1.0 / n as f64,
            nodes,
        })
    }

    /// Number of elements.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.n + 1
    }

    /// Midpoint of element `e`.
    pub fn midpoint(&self, e: usize) -> f64 {
        0.5 * (self.nodes[e] + self.nodes[e + 1])
    }
}

pub fn build_mesh(n: usize) -> Result<Mesh, FemError> {
    Mesh::new(n)
}
