"""Truncated path signatures and signature-moment experiments.

The signature of sampled data is the exact signature of its piecewise-linear
interpolant: the product over segments of exp(increment) in the truncated
tensor algebra. Each linear segment's signature is exactly the tensor
exponential of its increment, so no higher-order log corrections are needed;
refinement error relative to the underlying process is measured empirically
instead.
"""

from __future__ import annotations

import numpy as np

from . import tensor as ta
from .gmfbm import GmfbmSpec, SamplePath, TimeGrid, sample_batch
from .lift import cross_level2, lift_piecewise_linear
from .tensor import TruncatedTensor

__all__ = [
    "signature",
    "log_signature",
    "level_formulas_check",
    "expected_signature_mc",
    "cross_term_scaling",
]


def signature(path_or_values, level: int = 4) -> TruncatedTensor:
    """Truncated signature of the polyline through the sample points."""
    if level < 1:
        raise ValueError("level must be >= 1")
    values = (
        path_or_values.values
        if isinstance(path_or_values, SamplePath)
        else np.atleast_2d(np.asarray(path_or_values, dtype=float))
    )
    if values.shape[0] < 2:
        raise ValueError("need at least 2 grid points")
    acc = ta.unit(values.shape[1], level)
    for delta in np.diff(values, axis=0):
        acc = ta.mul(acc, ta.exp_of_increment(delta, level))
    return acc


def log_signature(path_or_values, level: int = 4) -> TruncatedTensor:
    return ta.log(signature(path_or_values, level))


def level_formulas_check(path_or_values) -> dict:
    """Residuals tying the signature's first two levels to the level-2 lift.

    For a geometric (piecewise-linear) lift, S^(1) equals the total increment
    and S^(2) equals the lift's level-2 tensor, whose symmetric part already
    carries (1/2) S^(1) (x) S^(1). The alternative reading, S^(2) =
    level-2 + (1/2) S^(1) (x) S^(1) with "level-2" meaning only the
    antisymmetric (area) part, is reported alongside.
    """
    sig = signature(path_or_values, level=2)
    rp = lift_piecewise_linear(path_or_values)
    x1, x2 = rp.total()
    s1 = sig.level_array(1)
    s2 = sig.level_array(2, reshape=True)
    half_sq = 0.5 * np.outer(s1, s1)
    area = 0.5 * (x2 - x2.T)
    _, viol = ta.is_group_like(sig)
    return {
        "level1_residual": float(np.abs(s1 - x1).max()),
        # adopted convention: S^(2) equals the geometric lift's level-2
        "level2_residual_geometric": float(np.abs(s2 - x2).max()),
        # alternative reading: level-2 means the area part only
        "level2_residual_area_plus_half_square": float(
            np.abs(s2 - (area + half_sq)).max()
        ),
        # literal full-level-2 + half-square reading (inconsistent for
        # geometric lifts; reported, not asserted)
        "level2_residual_full_plus_half_square": float(
            np.abs(s2 - (x2 + half_sq)).max()
        ),
        "shuffle_violation": float(viol),
    }


def expected_signature_mc(
    spec: GmfbmSpec,
    grid: TimeGrid,
    level: int,
    n_paths: int,
    seed: int,
    method: str = "cholesky",
) -> tuple[TruncatedTensor, TruncatedTensor]:
    """Monte Carlo mean of path signatures, with per-entry standard errors.

    Returns (mean, standard_error) as tensors of matching shape.
    """
    if n_paths < 2:
        raise ValueError("need at least 2 paths")
    values = sample_batch(spec, grid, seed, n_paths, method=method)
    d = spec.dim
    sums = [np.zeros(d ** n) for n in range(level + 1)]
    sq_sums = [np.zeros(d ** n) for n in range(level + 1)]
    for i in range(n_paths):
        sig = signature(values[i], level)
        for n in range(level + 1):
            sums[n] += sig.levels[n]
            sq_sums[n] += sig.levels[n] ** 2
    means = [s / n_paths for s in sums]
    ses = [
        np.sqrt(np.clip(q / n_paths - m ** 2, 0.0, None) / n_paths)
        for q, m in zip(sq_sums, means)
    ]
    return (
        TruncatedTensor(d, level, means),
        TruncatedTensor(d, level, ses),
    )


def cross_term_scaling(
    h_i: float,
    h_j: float,
    t_scales,
    n_paths: int,
    seed: int,
    n_steps: int = 256,
) -> dict:
    """Log-log slope of E|int int dB^{H_i} (x) dB^{H_j}|^2 against interval length.

    The double integral is computed exactly from piecewise-linear
    interpolants of the two independent fBm components on a common grid.
    The continuum prediction for the slope is 2 (H_i + H_j).
    """
    if h_i + h_j <= 0.5:
        raise ValueError(
            "H_i + H_j must exceed 1/2 for the cross Young integral to exist"
        )
    t_scales = np.asarray(sorted(float(t) for t in t_scales))
    if t_scales.size < 3:
        raise ValueError("need at least 3 interval lengths for the regression")
    moments = []
    ses = []
    for si, t in enumerate(t_scales):
        spec = GmfbmSpec((h_i, h_j), (1.0, 1.0), dim=1, horizon=t)
        grid = TimeGrid.uniform(n_steps, t)
        _, comps = sample_batch(
            spec, grid, seed + si, n_paths, method="circulant",
            return_components=True,
        )
        bi = comps[0, :, :, 0]  # (n_paths, n_steps+1)
        bj = comps[1, :, :, 0]
        dxj = np.diff(bj, axis=1)
        dxi = np.diff(bi, axis=1)
        cross = np.sum((bi[:, :-1] - bi[:, :1]) * dxj, axis=1) + 0.5 * np.sum(
            dxi * dxj, axis=1
        )
        sq = cross ** 2
        moments.append(sq.mean())
        ses.append(sq.std(ddof=1) / np.sqrt(n_paths))
    logs = np.log(t_scales)
    logm = np.log(moments)
    slope, intercept = np.polyfit(logs, logm, 1)
    return {
        "t_scales": t_scales.tolist(),
        "moments": [float(m) for m in moments],
        "stderrs": [float(s) for s in ses],
        "slope": float(slope),
        "intercept": float(intercept),
        "expected_slope": 2.0 * (h_i + h_j),
    }
