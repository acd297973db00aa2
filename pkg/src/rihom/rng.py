"""Reproducible uniforms addressed by (seed, stream, step).

Each stream owns a Philox counter generator keyed by ``SeedSequence([seed, stream])``,
so a stream's values never depend on how many other streams are drawn.
"""

from __future__ import annotations

import numpy as np


def stream_generator(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(stream)])))


def stream_uniforms(seed: int, stream: int, n_steps: int) -> np.ndarray:
    """Uniforms u(seed, stream, 0..n_steps-1) in [0, 1)."""
    return stream_generator(seed, stream).random(n_steps)


def uniform_matrix(seed: int, n_streams: int, n_steps: int) -> np.ndarray:
    """Array of shape (n_streams, n_steps); row s is stream s."""
    out = np.empty((n_streams, n_steps))
    for s in range(n_streams):
        out[s] = stream_uniforms(seed, s, n_steps)
    return out
