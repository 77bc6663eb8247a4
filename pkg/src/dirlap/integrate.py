"""Adaptive explicit Runge-Kutta integration with replayable step sequences.

This is the Dormand-Prince 5(4) embedded pair with a standard PI step-size
controller.  Two features matter for the truncated-domain simulations built
on top of it:

* accepted steps are clipped so that every requested sample time is hit
  exactly (no interpolation), and
* the accepted step sequence can be recorded and replayed on a second system
  of a different size, so two truncation radii can be compared with the
  integrator contributing only roundoff to the difference.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import StepSizeError

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
                187 / 2100, 1 / 40])
_ERR = _B5 - _B4

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0
_PI_ALPHA = 0.7 / 5.0
_PI_BETA = 0.4 / 5.0


@dataclass
class IntegrationResult:
    samples: list  # (t, y) pairs at the requested sample times
    steps: np.ndarray  # accepted step sizes in order
    n_steps: int
    n_rejected: int


def _initial_step(f, t0, y0, f0, rtol, atol, t_span):
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / scale) ** 2)) if y0.size else 0.0
    d1 = np.sqrt(np.mean((f0 / scale) ** 2)) if y0.size else 0.0
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * f0
    f1 = f(t0 + h0, y1)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, t_span)


def _step(f, t, y, h, k1):
    """One Dormand-Prince step.  Returns (y_new, err_vec, k_last)."""
    k = [k1]
    for i in range(1, 7):
        yi = y + h * sum(a * ki for a, ki in zip(_A[i], k))
        k.append(f(t + _C[i] * h, yi))
    y_new = yi  # stage 7 uses the 5th-order weights (FSAL)
    err = h * sum(e * ki for e, ki in zip(_ERR, k) if e != 0.0)
    return y_new, err, k[6]


def integrate(f: Callable[[float, np.ndarray], np.ndarray], y0: np.ndarray,
              sample_times: Sequence[float], rtol: float = 1e-8,
              atol: float = 1e-10, max_steps: int = 1_000_000,
              replay: np.ndarray | None = None,
              step_callback: Callable[[float, np.ndarray], None] | None = None,
              ) -> IntegrationResult:
    """Integrate ``y' = f(t, y)`` from 0, sampling at the given times.

    ``sample_times`` must be nondecreasing and nonnegative; a leading 0 is
    sampled from the initial state.  With ``replay`` the exact step sequence
    of a previous run is reused and no error control happens.  An optional
    ``step_callback(t, y)`` runs after every accepted step and may raise to
    abort (used for blow-up detection).
    """
    times = [float(t) for t in sample_times]
    if any(t < 0 for t in times) or any(b < a for a, b in zip(times, times[1:])):
        raise ValueError("sample times must be nonnegative and sorted")
    if not times:
        raise ValueError("need at least one sample time")
    t_end = times[-1]

    y = np.array(y0, dtype=float)
    t = 0.0
    samples = []
    next_idx = 0
    while next_idx < len(times) and times[next_idx] <= 0.0:
        samples.append((times[next_idx], y.copy()))
        next_idx += 1
    if next_idx >= len(times):
        return IntegrationResult(samples, np.array([]), 0, 0)

    f0 = f(t, y)
    taken: list[float] = []
    n_rejected = 0
    replay_seq = None if replay is None else list(replay)
    replay_pos = 0
    h = None if replay_seq is not None else _initial_step(f, t, y, f0, rtol, atol, t_end)
    err_prev = 1.0
    k1 = f0

    while t < t_end:
        if len(taken) >= max_steps:
            raise StepSizeError(f"exceeded {max_steps} steps at t={t:.6g}")
        if replay_seq is not None:
            if replay_pos >= len(replay_seq):
                raise ValueError("replay sequence shorter than the integration span")
            h_try = replay_seq[replay_pos]
        else:
            h_try = min(h, t_end - t)
            # land exactly on the next sample time
            if t + h_try > times[next_idx] - 1e-14 * max(1.0, times[next_idx]):
                h_try = times[next_idx] - t
        if h_try <= 1e-14 * max(1.0, t):
            raise StepSizeError(f"step size underflow at t={t:.6g}")

        y_new, err_vec, k_last = _step(f, t, y, h_try, k1)
        if replay_seq is not None:
            accept = True
            replay_pos += 1
        else:
            scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
            err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))
            if err <= 1.0:
                accept = True
                err = max(err, 1e-10)
                factor = _SAFETY * err ** -_PI_ALPHA * err_prev ** _PI_BETA
                h = h_try * min(_MAX_FACTOR, max(_MIN_FACTOR, factor))
                err_prev = err
            else:
                accept = False
                n_rejected += 1
                h = h_try * max(_MIN_FACTOR, _SAFETY * err ** -0.2)

        if accept:
            t = t + h_try
            y = y_new
            k1 = k_last
            taken.append(h_try)
            if step_callback is not None:
                step_callback(t, y)
            while next_idx < len(times) and t >= times[next_idx] - 1e-12 * max(1.0, t):
                samples.append((times[next_idx], y.copy()))
                next_idx += 1
        # on rejection t and y are unchanged, so the FSAL stage k1 stays valid

    return IntegrationResult(samples, np.array(taken), len(taken), n_rejected)
