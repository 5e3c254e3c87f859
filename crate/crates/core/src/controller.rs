//! Anything that maps an observation vector to two wheel outputs in [-1, 1].

use crate::neat::{Genome, Network};

pub const PREDATOR_ARITY: (usize, usize) = (3, 2);
pub const PREY_ARITY: (usize, usize) = (8, 2);

pub trait Controller: Sync {
    /// (inputs, outputs) this controller was built for.
    fn arity(&self) -> (usize, usize);

    /// Left and right wheel outputs in [-1, 1].
    fn act(&self, inputs: &[f64]) -> [f64; 2];
}

impl Controller for Network {
    fn arity(&self) -> (usize, usize) {
        (self.input_arity(), self.output_arity())
    }

    fn act(&self, inputs: &[f64]) -> [f64; 2] {
        let out = self.activate(inputs).expect("arity checked before the episode");
        [out[0], out[1]]
    }
}

/// A genome compiled once for an episode.
pub fn compile(genome: &Genome) -> Network {
    genome.compile()
}

/// Emits the same wheel outputs whatever it sees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant {
    pub arity: (usize, usize),
    pub output: [f64; 2],
}

impl Constant {
    pub fn predator(left: f64, right: f64) -> Self {
        Constant { arity: PREDATOR_ARITY, output: [left, right] }
    }

    pub fn prey(left: f64, right: f64) -> Self {
        Constant { arity: PREY_ARITY, output: [left, right] }
    }

    pub fn stationary_prey() -> Self {
        Constant::prey(0.0, 0.0)
    }
}

impl Controller for Constant {
    fn arity(&self) -> (usize, usize) {
        self.arity
    }

    fn act(&self, _inputs: &[f64]) -> [f64; 2] {
        self.output
    }
}
