use super::Tensor;
use crate::error::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(pub(crate) usize);

/// Train mode uses batch statistics and stochastic dropout; eval mode is a
/// deterministic function of inputs and parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Backward bookkeeping for one recorded operation.
#[derive(Debug)]
pub(crate) enum Op {
    Leaf,
    Affine {
        x: Var,
        w: Var,
        b: Var,
    },
    Conv3x3 {
        x: Var,
        k: Var,
        b: Var,
    },
    Pointwise {
        x: Var,
        k: Var,
        b: Var,
    },
    Relu {
        x: Var,
    },
    BatchNormTrain {
        x: Var,
        gamma: Var,
        beta: Var,
        xhat: Vec<f64>,
        inv_std: Vec<f64>,
    },
    BatchNormEval {
        x: Var,
        gamma: Var,
        inv_std: Vec<f64>,
        xhat: Vec<f64>,
        beta: Var,
    },
    Dropout {
        x: Var,
        mask: Vec<f64>,
    },
    Concat {
        xs: Vec<Var>,
        channels: Vec<usize>,
    },
    GlobalAvgPool {
        x: Var,
    },
    AvgPool2x2 {
        x: Var,
    },
    SoftmaxCrossEntropy {
        logits: Var,
        labels: Vec<usize>,
        probs: Vec<f64>,
    },
    Sum {
        x: Var,
    },
    Dot {
        x: Var,
        weights: Vec<f64>,
    },
}

impl Op {
    fn inputs(&self) -> Vec<Var> {
        match self {
            Op::Leaf => vec![],
            Op::Affine { x, w, b } => vec![*x, *w, *b],
            Op::Conv3x3 { x, k, b } | Op::Pointwise { x, k, b } => vec![*x, *k, *b],
            Op::BatchNormTrain { x, gamma, beta, .. }
            | Op::BatchNormEval { x, gamma, beta, .. } => {
                vec![*x, *gamma, *beta]
            }
            Op::Relu { x }
            | Op::Dropout { x, .. }
            | Op::GlobalAvgPool { x }
            | Op::AvgPool2x2 { x }
            | Op::Sum { x }
            | Op::Dot { x, .. } => vec![*x],
            Op::SoftmaxCrossEntropy { logits, .. } => vec![*logits],
            Op::Concat { xs, .. } => xs.clone(),
        }
    }
}

pub(crate) struct Node {
    pub(crate) value: Tensor,
    pub(crate) requires_grad: bool,
    pub(crate) leaf: bool,
    pub(crate) op: Op,
}

/// Arena of recorded values in topological (creation) order.
///
/// A tape supports exactly one [`Tape::backward`] call; intermediate values
/// are released as the reverse sweep passes them, so a second call is a
/// usage error until [`Tape::reset`].
#[derive(Default)]
pub struct Tape {
    pub(crate) nodes: Vec<Node>,
    grads: Vec<Option<Vec<f64>>>,
    consumed: bool,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a constant input.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, false, Op::Leaf)
    }

    /// Records a leaf whose gradient is retained by `backward`.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.push(value, true, Op::Leaf)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Gradient of the last backward pass with respect to a leaf.
    pub fn grad(&self, v: Var) -> Option<&[f64]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn reset(&mut self) {
        self.nodes.clear();
        self.grads.clear();
        self.consumed = false;
    }

    pub(crate) fn push(&mut self, value: Tensor, requires_grad: bool, op: Op) -> Var {
        let leaf = matches!(op, Op::Leaf);
        debug_assert!(
            leaf || value.is_finite() || !self.op_inputs_finite(&op),
            "non-finite output from finite inputs"
        );
        self.nodes.push(Node {
            value,
            requires_grad,
            leaf,
            op,
        });
        Var(self.nodes.len() - 1)
    }

    fn op_inputs_finite(&self, op: &Op) -> bool {
        op.inputs()
            .iter()
            .all(|v| self.nodes[v.0].value.is_finite())
    }

    pub(crate) fn any_grad(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    /// Reverse sweep from a scalar `loss`, filling gradients of every
    /// gradient-requiring leaf that the loss depends on.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.consumed {
            return Err(Error::Usage(
                "backward already ran on this tape; call reset before recording again".into(),
            ));
        }
        if self.nodes[loss.0].value.numel() != 1 {
            return Err(Error::Usage(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.nodes[loss.0].value.shape()
            )));
        }
        self.consumed = true;
        let mut grads: Vec<Option<Vec<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        if self.nodes[loss.0].requires_grad {
            grads[loss.0] = Some(vec![1.0]);
        }
        for i in (0..=loss.0).rev() {
            if self.nodes[i].leaf {
                continue;
            }
            if let Some(g) = grads[i].take() {
                let op = std::mem::replace(&mut self.nodes[i].op, Op::Leaf);
                super::ops::backward_op(self, &op, &self.nodes[i].value, &g, &mut grads);
            }
            // Non-leaf intermediates are no longer needed by anything upstream.
            let shape = self.nodes[i].value.shape().to_vec();
            self.nodes[i].value = Tensor {
                shape,
                data: Vec::new(),
            };
        }
        for (i, g) in grads.iter_mut().enumerate() {
            let node = &self.nodes[i];
            if !(node.leaf && node.requires_grad) {
                *g = None;
            } else if g.is_none() {
                *g = Some(vec![0.0; node.value.numel()]);
            }
        }
        self.grads = grads;
        Ok(())
    }
}

/// Adds `delta` into the gradient slot of `v`, taking it over on first use.
pub(crate) fn accumulate(grads: &mut [Option<Vec<f64>>], tape: &Tape, v: Var, delta: Vec<f64>) {
    if !tape.nodes[v.0].requires_grad {
        return;
    }
    match &mut grads[v.0] {
        Some(g) => {
            for (a, b) in g.iter_mut().zip(&delta) {
                *a += b;
            }
        }
        slot @ None => *slot = Some(delta),
    }
}
