"""Three-party BB84 key rate and its ceiling for states preparable in a triangle PEN."""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np
from scipy.optimize import minimize_scalar

from penbounds.errors import InputError
from penbounds.linalg import DensityMatrix, binary_entropy

_I = np.eye(2)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Z = np.diag([1.0, -1.0]).astype(complex)


def _pauli(*ops) -> np.ndarray:
    return reduce(np.kron, ops)


_STRINGS = {
    "xxx": _pauli(_X, _X, _X),
    "zab": _pauli(_Z, _Z, _I),
    "zac": _pauli(_Z, _I, _Z),
    "zb": _pauli(_I, _Z, _I),
    "zc": _pauli(_I, _I, _Z),
}


@dataclass(frozen=True)
class CorrelatorSet:
    """Pauli expectations <XXX>, <Z_A Z_B>, <Z_A Z_C>, <Z_B>, <Z_C>."""

    xxx: float
    zab: float
    zac: float
    zb: float = 0.0
    zc: float = 0.0

    def __post_init__(self):
        for name in ("xxx", "zab", "zac", "zb", "zc"):
            val = getattr(self, name)
            if not -1.0 - 1e-12 <= val <= 1.0 + 1e-12:
                raise InputError(f"correlator {name}={val} outside [-1, 1]")

    def as_dict(self) -> dict[str, float]:
        return {k: float(getattr(self, k)) for k in ("xxx", "zab", "zac", "zb", "zc")}


def correlators_from_state(rho) -> CorrelatorSet:
    m = rho.entries if isinstance(rho, DensityMatrix) else DensityMatrix(rho).entries
    if m.shape != (8, 8):
        raise InputError(f"need a three-qubit (8x8) state, got {m.shape}")
    vals = {}
    for name, op in _STRINGS.items():
        z = np.trace(op @ m)
        if abs(z.imag) > 1e-9:  # pragma: no cover - Hermitian input guarantees this
            raise InputError(f"<{name}> has imaginary part {z.imag}")
        vals[name] = float(np.clip(z.real, -1.0, 1.0))
    return CorrelatorSet(**vals)


def _h_err(c: float) -> float:
    return binary_entropy(min(1.0, max(0.0, (1.0 - c) / 2.0)))


def bb84_rate(c: CorrelatorSet) -> float:
    """Asymptotic rate: 1 - h((1-<XXX>)/2) - max over the two Z error terms. May be negative."""
    return 1.0 - _h_err(c.xxx) - max(_h_err(c.zab), _h_err(c.zac))


@dataclass(frozen=True)
class Feasibility:
    feasible: bool
    inflation_slack: float
    combined_slack: float


def pen3_feasible(c: CorrelatorSet, tol: float = 1e-9) -> Feasibility:
    """Network constraints for a three-node PEN.

    ``|zab| + |zac| <= 1 + |zb||zc|`` and ``xxx^2 + 2 min(|zab|, |zac|) <= 2``.
    The second condition is taken on magnitudes, since a local X flip changes
    the sign of a Z correlator without touching <XXX>.
    """
    inflation = 1.0 + abs(c.zb) * abs(c.zc) - abs(c.zab) - abs(c.zac)
    combined = 2.0 - c.xxx**2 - 2.0 * min(abs(c.zab), abs(c.zac))
    return Feasibility(inflation >= -tol and combined >= -tol, inflation, combined)


@dataclass(frozen=True)
class CeilingResult:
    value: float
    correlators: CorrelatorSet


def _rate_grid(x: np.ndarray, z: np.ndarray) -> np.ndarray:
    def h(p):
        p = np.clip(p, 0.0, 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = -p * np.log2(p) - (1 - p) * np.log2(1 - p)
        return np.nan_to_num(out, nan=0.0)

    return 1.0 - h((1.0 - x) / 2.0) - h((1.0 - z) / 2.0)


def _best_correlators(x: float, z: float) -> CorrelatorSet:
    # smallest |zb| = |zc| meeting the inflation constraint with zab = zac = z
    zloc = float(np.sqrt(max(0.0, 2.0 * abs(z) - 1.0)))
    return CorrelatorSet(xxx=x, zab=z, zac=z, zb=zloc, zc=zloc)


def bb84_ceiling_search(
    resolution: int = 1000, xxx_bounds: tuple[float, float] = (-1.0, 1.0)
) -> CeilingResult:
    """Maximize the BB84 rate over PEN-3 feasible correlators.

    The rate depends on the Z terms only through the worse of the two, so the
    search runs over ``(xxx, z)`` with ``zab = zac = z`` and ``zb, zc``
    chosen to satisfy the inflation constraint when possible. A grid pass is
    followed by a bounded scalar refinement along the feasibility boundary.
    """
    if resolution < 100:
        raise InputError(f"resolution must be at least 100, got {resolution}")
    lo, hi = xxx_bounds
    xs = np.linspace(lo, hi, resolution + 1)
    zs = np.linspace(-1.0, 1.0, 2 * resolution + 1)
    xx, zz = np.meshgrid(xs, zs, indexing="ij")
    ok = xx**2 + 2.0 * np.abs(zz) <= 2.0 + 1e-12
    rates = np.where(ok, _rate_grid(xx, zz), -np.inf)
    # among ties prefer nonnegative correlations
    order = np.lexsort((-xx.ravel(), -zz.ravel(), -np.round(rates.ravel(), 12)))
    k = order[0]
    best_x, best_z, best = float(xx.ravel()[k]), float(zz.ravel()[k]), float(rates.ravel()[k])

    # the optimum sits on |z| = 1 - x^2/2 (larger |z| only helps)
    def boundary_rate(x: float) -> float:
        z = min(1.0, 1.0 - x * x / 2.0)
        return float(_rate_grid(np.array(x), np.array(z)))

    step = (hi - lo) / resolution
    a, b = max(lo, best_x - 2 * step), min(hi, best_x + 2 * step)
    candidates = [(best, best_x, best_z)]
    for x in (a, b):
        candidates.append((boundary_rate(x), x, min(1.0, 1.0 - x * x / 2.0)))
    if b > a:
        res = minimize_scalar(lambda x: -boundary_rate(x), bounds=(a, b), method="bounded",
                              options={"xatol": 1e-12})
        candidates.append((-res.fun, float(res.x), min(1.0, 1.0 - res.x**2 / 2.0)))
    value, x, z = max(candidates, key=lambda t: t[0])
    return CeilingResult(value, _best_correlators(x, abs(z) if best_z >= 0 else -abs(z)))


def ghz_state() -> DensityMatrix:
    psi = np.zeros(8)
    psi[0] = psi[7] = 1 / np.sqrt(2)
    return DensityMatrix(np.outer(psi, psi))


def bell_mixture_state() -> DensityMatrix:
    """Equal mixture of (Bell_AB x |+>_C) and (Bell_AC x |+>_B)."""
    bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
    plus = np.array([1, 1]) / np.sqrt(2)
    ab_c = np.kron(bell, plus)
    # reorder (A, C, B) -> (A, B, C)
    ac_b = np.kron(bell, plus).reshape(2, 2, 2).transpose(0, 2, 1).reshape(-1)
    rho = (np.outer(ab_c, ab_c) + np.outer(ac_b, ac_b)) / 2
    return DensityMatrix(rho)
