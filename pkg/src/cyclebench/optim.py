"""SGD with momentum and decoupled weight decay (SGDW)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import ShapeError


@dataclass(frozen=True)
class OptimizerConfig:
    eta_max: float = 0.128
    momentum: float = 0.875
    weight_decay: float = 5e-4
    decoupled: bool = True

    def validate(self) -> list[str]:
        errors = []
        if not 0.0 <= self.momentum < 1.0:
            errors.append("momentum outside [0, 1)")
        if self.weight_decay < 0:
            errors.append("weight_decay below 0")
        if self.eta_max < 0:
            errors.append("eta_max below 0")
        if not self.decoupled:
            errors.append("only decoupled weight decay is supported")
        return errors


@dataclass
class SgdwState:
    params: list[np.ndarray]
    velocity: list[np.ndarray]


def init_state(params: list[np.ndarray]) -> SgdwState:
    return SgdwState(params=params, velocity=[np.zeros_like(p) for p in params])


def sgdw_step(
    state: SgdwState, grads: list[np.ndarray], lr: float, opt: OptimizerConfig
) -> SgdwState:
    """One update: v <- momentum*v + g; theta <- theta - lr*v - lr*wd*theta.

    The decay term is decoupled from the gradient and scaled by the
    current scheduled learning rate.  Parameters are updated in place.
    """
    if len(grads) != len(state.params):
        raise ShapeError(f"{len(grads)} gradients for {len(state.params)} parameters")
    for p, v, g in zip(state.params, state.velocity, grads):
        if g.shape != p.shape:
            raise ShapeError(f"gradient shape {g.shape} vs parameter {p.shape}")
        v *= opt.momentum
        v += g
        p *= 1.0 - lr * opt.weight_decay
        p -= lr * v
    return state
