"""Mixed-radix DFT engine for the channelizer transform sizes.

The channelizer works at sizes that are products of small factors
(20 = 4*5, 1280 = 4^4*5, 2048 = 4^5*2), so the engine implements an
iterative Cooley-Tukey decomposition over the radix set {2, 3, 4, 5}.
Sizes with other prime factors fall back to direct O(N^2) evaluation;
that is a documented limitation, not a performance path.

Conventions: the forward transform uses the kernel exp(-j*2*pi*k*m/N)
and is unscaled; the inverse uses the conjugate kernel and carries the
whole 1/N factor.  Plans are immutable and safe to share.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, InvalidSizeError

_RADIX_TRIALS = (4, 2, 3, 5)
_DIRECT = "direct"
# cap on scratch kernel size for the direct path (complex128 entries)
_DIRECT_CHUNK = 1 << 21


def factorize(size):
    """Factor ``size`` over {4, 2, 3, 5}; return None when impossible."""
    radices = []
    n = size
    for r in _RADIX_TRIALS:
        while n % r == 0:
            radices.append(r)
            n //= r
    return tuple(radices) if n == 1 else None


@dataclass(frozen=True)
class TransformPlan:
    """Reusable description of one DFT: size, direction and factor chain."""

    size: int
    direction: str  # "forward" | "inverse"
    factorization: tuple | str  # radix tuple, or "direct"
    _stages: tuple = field(default=(), repr=False, compare=False)

    @property
    def is_direct(self):
        return self.factorization == _DIRECT


def make_plan(size, direction="forward"):
    """Build a TransformPlan for the given size and direction.

    Mixed-radix stages are precomputed here (twiddle and butterfly
    tables per decomposition level) so repeated transforms only do
    array arithmetic.
    """
    if not isinstance(size, (int, np.integer)) or isinstance(size, bool):
        raise InvalidSizeError(f"transform size must be an integer, got {size!r}")
    if size < 1:
        raise InvalidSizeError(f"transform size must be >= 1, got {size}")
    if direction not in ("forward", "inverse"):
        raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")

    radices = factorize(size)
    if radices is None:
        return TransformPlan(int(size), direction, _DIRECT)

    sign = -1.0 if direction == "forward" else 1.0
    stages = []
    n = int(size)
    for r in radices:
        m = n // r
        s = np.arange(r)
        twiddle = np.exp(sign * 2j * np.pi * np.outer(s, np.arange(m)) / n)
        butterfly = np.exp(sign * 2j * np.pi * np.outer(s, s) / r)
        stages.append((r, m, twiddle, butterfly))
        n = m
    return TransformPlan(int(size), direction, radices, tuple(stages))


def _mixed_radix(x2, stages, level):
    """Recursive Cooley-Tukey on a (batch, n) array; returns (batch, n)."""
    if level == len(stages):
        return x2
    r, m, twiddle, butterfly = stages[level]
    b = x2.shape[0]
    # split into the r decimated subsequences x[s::r]
    sub = x2.reshape(b, m, r).transpose(0, 2, 1).reshape(b * r, m)
    sub = _mixed_radix(sub, stages, level + 1)
    y = sub.reshape(b, r, m) * twiddle[None, :, :]
    # r-point DFT across the subsequence axis, then reorder k = k1 + m*k2
    z = y.transpose(0, 2, 1) @ butterfly
    return z.transpose(0, 2, 1).reshape(b, r * m)


def _direct(x2, size, sign):
    out = np.empty_like(x2)
    k_block = max(1, _DIRECT_CHUNK // size)
    m = np.arange(size)
    for k0 in range(0, size, k_block):
        k = np.arange(k0, min(k0 + k_block, size))
        kernel = np.exp(sign * 2j * np.pi * np.outer(m, k) / size)
        out[:, k0 : k0 + len(k)] = x2 @ kernel
    return out


def transform_many(plan, xs):
    """Transform each row of a (batch, size) array under ``plan``."""
    xs = np.asarray(xs, dtype=np.complex128)
    if xs.ndim != 2 or xs.shape[1] != plan.size:
        raise DimensionError(
            f"expected (batch, {plan.size}) input, got shape {xs.shape}"
        )
    if plan.is_direct:
        out = _direct(xs, plan.size, -1.0 if plan.direction == "forward" else 1.0)
    else:
        out = _mixed_radix(xs.copy(), plan._stages, 0)
    if plan.direction == "inverse":
        out /= plan.size
    return out


def transform(plan, x):
    """Transform one length-``plan.size`` vector; the input is not modified."""
    x = np.asarray(x, dtype=np.complex128)
    if x.ndim != 1 or x.shape[0] != plan.size:
        raise DimensionError(f"expected length-{plan.size} vector, got shape {x.shape}")
    return transform_many(plan, x[None, :])[0]
