"""Tensors, reverse-mode gradients, Adam and seeded random streams."""
from .optim import AdamState, adam_step
from .rng import Rng
from .tensor import (
    Tape,
    Tensor,
    add,
    as_tensor,
    exp,
    log,
    matmul,
    matrix_power,
    mix,
    mlp,
    mul,
    record,
    reshape,
    scale,
    solve_or_invert,
    square,
    sub,
    take_last,
    trace,
    transpose,
    tsum,
)


def backward(tape, loss):
    """Functional alias for ``tape.backward(loss)``."""
    return tape.backward(loss)
