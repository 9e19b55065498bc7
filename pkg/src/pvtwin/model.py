"""Lumped single-diode PV model.

Implements the intermediate electrical quantities (photocurrent, modified
ideality factor, diode saturation current), a real-branch Lambert W
evaluation, the closed-form maximum-power-point prediction built on it, the
implicit I-V curve solver used as a cross-check, and the KCL residual that
drives equivalent-irradiance estimation.

All computational kernels accept numpy arrays and broadcast, so swarm
optimizers can evaluate whole particle populations in one call. The
dataclass wrappers below provide the scalar, validating API.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DegenerateError, DomainError, InfeasibleError

# Exact SI defined values.
BOLTZMANN = 1.380649e-23  # J/K
ELEMENTARY_CHARGE = 1.602176634e-19  # C

# Below this irradiance the array is treated as dark and the operating point
# is pinned to zero power instead of evaluating W of a near-zero argument.
DARK_IRRADIANCE = 1.0  # W/m^2

# Default admissible cell-temperature range, degrees Celsius.
T_CELL_RANGE = (-40.0, 90.0)

_INV_E = -np.exp(-1.0)


@dataclass(frozen=True)
class PlantConstants:
    """Fixed plant-level constants (not fitted).

    ``ns`` is the lumped series cell count and ``alpha_isc`` the
    short-circuit-current temperature coefficient; both are
    plant-configuration inputs. The remaining fields are physical constants
    and should normally be left at their defaults.
    """

    ns: int = 72
    alpha_isc: float = 0.0005  # 1/degC
    k_boltzmann: float = BOLTZMANN
    q_electron: float = ELEMENTARY_CHARGE
    t_stc: float = 298.15  # K
    t_fp: float = 273.15  # K
    exp_coeff: float = 47.1

    def __post_init__(self):
        if self.ns < 1:
            raise DomainError(f"ns must be >= 1, got {self.ns}")
        if self.t_stc != 298.15 or self.t_fp != 273.15:
            raise DomainError("t_stc and t_fp are fixed at 298.15 K and 273.15 K")
        if self.k_boltzmann <= 0 or self.q_electron <= 0:
            raise DomainError("physical constants must be positive")


@dataclass(frozen=True)
class PvParams:
    """The five single-diode model parameters.

    rs: series resistance (ohm); rsh: shunt resistance (ohm); kd: diode
    ideality coefficient; iph0: photocurrent coefficient (A per W/m^2, i.e.
    ``iph0 * g`` is in amperes); is0: diode saturation current coefficient (A).
    """

    rs: float
    rsh: float
    kd: float
    iph0: float
    is0: float

    def __post_init__(self):
        for name in ("rs", "rsh", "kd", "iph0", "is0"):
            if not getattr(self, name) > 0.0:
                raise DomainError(f"{name} must be strictly positive")
        if not self.rs < self.rsh:
            raise DomainError(f"rs ({self.rs}) must be smaller than rsh ({self.rsh})")

    def as_array(self) -> np.ndarray:
        return np.array([self.rs, self.rsh, self.kd, self.iph0, self.is0])

    @classmethod
    def from_array(cls, x) -> "PvParams":
        rs, rsh, kd, iph0, is0 = (float(v) for v in x)
        return cls(rs=rs, rsh=rsh, kd=kd, iph0=iph0, is0=is0)

    def replace(self, **kw) -> "PvParams":
        d = {"rs": self.rs, "rsh": self.rsh, "kd": self.kd, "iph0": self.iph0, "is0": self.is0}
        d.update(kw)
        return PvParams(**d)


PARAM_NAMES = ("rs", "rsh", "kd", "iph0", "is0")


@dataclass(frozen=True)
class EnvInputs:
    """Environmental inputs: irradiance (W/m^2) and cell temperature (degC)."""

    g: float
    t_c: float

    def __post_init__(self):
        if self.g < 0.0:
            raise DomainError(f"irradiance must be >= 0, got {self.g}")
        if not T_CELL_RANGE[0] <= self.t_c <= T_CELL_RANGE[1]:
            raise DomainError(f"cell temperature {self.t_c} outside {T_CELL_RANGE}")


@dataclass(frozen=True)
class DerivedQuantities:
    """Intermediate quantities: photocurrent, modified ideality factor (V),
    saturation current, and the Lambert-W auxiliary value."""

    i_ph: float
    a: float
    i_s: float
    omega: float


@dataclass(frozen=True)
class OperatingPoint:
    """A (voltage, current, power) triple; ``p == v * i`` by construction."""

    v: float
    i: float
    p: float

    @classmethod
    def from_vi(cls, v: float, i: float) -> "OperatingPoint":
        return cls(v=float(v), i=float(i), p=float(v) * float(i))


ZERO_POINT = OperatingPoint(0.0, 0.0, 0.0)


# ---------------------------------------------------------------------------
# Lambert W
# ---------------------------------------------------------------------------

def lambert_w0(x):
    """Principal-branch Lambert W for real ``x >= -1/e``.

    Initial guess: ``ln x - ln ln x`` for large x, a branch-point series near
    ``-1/e`` and a series start near 0, then Halley iteration. Converges to
    better than 1e-12 relative residual in at most 10 iterations.

    Accepts scalars or arrays; raises DomainError if any element is below
    ``-1/e`` (beyond rounding slack at the branch point).
    """
    x_arr = np.asarray(x, dtype=float)
    scalar = x_arr.ndim == 0
    x_arr = np.atleast_1d(x_arr)
    if np.any(x_arr < _INV_E * (1.0 + 1e-12) - 1e-300) or np.any(np.isnan(x_arr)):
        raise DomainError("lambert_w0 requires x >= -1/e")
    x_arr = np.maximum(x_arr, _INV_E)

    w = np.empty_like(x_arr)
    big = x_arr > np.e
    near_branch = x_arr < -0.25
    small = np.abs(x_arr) <= 0.25
    rest = ~(big | near_branch | small)

    if np.any(big):
        lx = np.log(x_arr[big])
        w[big] = lx - np.log(lx)
    if np.any(near_branch):
        # series around the branch point w = -1 + p - p^2/3 + 11 p^3/72
        p = np.sqrt(2.0 * (np.e * x_arr[near_branch] + 1.0))
        w[near_branch] = -1.0 + p - p * p / 3.0 + 11.0 * p**3 / 72.0
    if np.any(small):
        xs = x_arr[small]
        w[small] = xs * (1.0 - xs * (1.0 - 1.5 * xs))
    if np.any(rest):
        w[rest] = np.log1p(x_arr[rest])

    for _ in range(10):
        ew = np.exp(w)
        f = w * ew - x_arr
        wp1 = w + 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
            dw = f / denom
        # at the branch point w = -1 the Halley denominator degenerates; the
        # series start is already exact there
        dw = np.where(np.isfinite(dw), dw, 0.0)
        w = w - dw
        if np.all(np.abs(dw) <= 1e-14 * (1.0 + np.abs(w))):
            break
    return float(w[0]) if scalar else w


def lambert_w0_exp(y):
    """``W0(exp(y))`` for real ``y``, stable for arguments far beyond
    the overflow range of ``exp``.

    Solves ``w + log(w) = y`` by Newton iteration for w > 0; for very
    negative y it reduces to ``exp(y)`` itself.
    """
    y_arr = np.asarray(y, dtype=float)
    scalar = y_arr.ndim == 0
    y_arr = np.atleast_1d(y_arr)

    w = np.where(y_arr > 1.0, y_arr - np.log(np.maximum(y_arr, 1.1)),
                 np.exp(np.minimum(y_arr, 1.0)))
    w = np.maximum(w, 1e-300)
    for _ in range(60):
        f = w + np.log(w) - y_arr
        dw = f * w / (w + 1.0)
        w = np.maximum(w - dw, 0.5 * w)  # keep w positive
        if np.all(np.abs(dw) <= 1e-15 * (1.0 + np.abs(w))):
            break
    return float(w[0]) if scalar else w


# ---------------------------------------------------------------------------
# Vectorized kernels (broadcast over any mix of array-shaped inputs)
# ---------------------------------------------------------------------------

def derived_arrays(rs, rsh, kd, iph0, is0, g, t_c, plant: PlantConstants,
                   exact_omega: bool = False):
    """Photocurrent, modified ideality factor, saturation current and omega.

    Returns ``(i_ph, a, i_s, omega)`` broadcast to the common shape. Where
    the photocurrent is zero (dark), omega is returned as 0.
    """
    g = np.asarray(g, dtype=float)
    t_c = np.asarray(t_c, dtype=float)
    i_ph = g * np.asarray(iph0, float) * (1.0 + (t_c - 25.0) * plant.alpha_isc)
    t_ratio = (t_c + plant.t_fp) / plant.t_stc
    a = np.asarray(kd, float) * (plant.k_boltzmann * plant.t_stc / plant.q_electron) \
        * plant.ns * t_ratio
    i_s = np.asarray(is0, float) * t_ratio**3 \
        * np.exp(plant.exp_coeff * (1.0 - 1.0 / t_ratio))
    if exact_omega:
        arg = np.e * (i_ph / i_s + 1.0)
    else:
        arg = i_ph * np.e / i_s
    omega = np.where(arg > 0.0, lambert_w0(np.maximum(arg, 0.0)), 0.0)
    return i_ph, a, i_s, omega


def mpp_arrays(rs, rsh, kd, iph0, is0, g, t_c, plant: PlantConstants,
               exact_omega: bool = False):
    """Closed-form MPP voltage and current.

    Returns ``(v, i)``; entries where omega <= 1 (dark / nonphysical) are NaN
    and entries with g below the dark floor are zero.
    """
    i_ph, a, i_s, omega = derived_arrays(rs, rsh, kd, iph0, is0, g, t_c, plant,
                                         exact_omega=exact_omega)
    rs = np.asarray(rs, float)
    rsh = np.asarray(rsh, float)
    with np.errstate(divide="ignore", invalid="ignore"):
        v = (1.0 + rs / rsh) * a * (omega - 1.0) - rs * i_ph * (1.0 - 1.0 / omega)
        i = i_ph * (1.0 - 1.0 / omega) - a * (omega - 1.0) / rsh
    dark = np.asarray(g, float) < DARK_IRRADIANCE
    bad = (omega <= 1.0) & ~dark
    v = np.where(dark, 0.0, np.where(bad, np.nan, v))
    i = np.where(dark, 0.0, np.where(bad, np.nan, i))
    return v, i


def current_arrays(rs, rsh, kd, iph0, is0, g, t_c, v, plant: PlantConstants,
                   tol_scale: float = 1e-9, max_iter: int = 100):
    """Current on the implicit single-diode curve at terminal voltage ``v``.

    Uses the explicit Lambert-W form of the curve (evaluated in log space so
    large plants cannot overflow) as the starting point, then polishes with
    safeguarded Newton steps until ``|residual| <= tol_scale * max(1, i_ph)``.
    Unconverged entries are NaN.
    """
    rs = np.asarray(rs, float)
    rsh = np.asarray(rsh, float)
    v = np.asarray(v, float)
    i_ph, a, i_s, _ = derived_arrays(rs, rsh, kd, iph0, is0, g, t_c, plant)

    r_par = rs * rsh / (rs + rsh)
    c = i_ph + i_s + v / rs
    y = np.log(r_par * i_s / a) + r_par * c / a
    w = lambert_w0_exp(y)
    u = r_par * c - a * w  # diode voltage V + I*rs
    i = (u - v) / rs

    tol = tol_scale * np.maximum(1.0, np.abs(i_ph))

    def resid(i_val):
        uu = v + i_val * rs
        with np.errstate(over="ignore"):
            ex = np.exp(np.minimum(uu / a, 700.0))
        return i_ph - i_s * (ex - 1.0) - uu / rsh - i_val

    f = resid(i)
    converged = np.abs(f) <= tol
    # bracket: residual is strictly decreasing in i
    lo = np.where(f > 0.0, i, -v / rs - 1.0)
    hi = np.where(f < 0.0, i, i_ph + np.abs(v) / rsh + 1.0)
    for _ in range(max_iter):
        if np.all(converged):
            break
        uu = v + i * rs
        with np.errstate(over="ignore"):
            ex = np.exp(np.minimum(uu / a, 700.0))
        fp = -i_s * ex * rs / a - rs / rsh - 1.0
        step = f / fp
        i_new = i - step
        out = (i_new <= lo) | (i_new >= hi) | ~np.isfinite(i_new)
        i_new = np.where(out & ~converged, 0.5 * (lo + hi), i_new)
        i = np.where(converged, i, i_new)
        f = np.where(converged, f, resid(i))
        lo = np.where(~converged & (f > 0.0), i, lo)
        hi = np.where(~converged & (f < 0.0), i, hi)
        converged = np.abs(f) <= tol
    return np.where(converged, i, np.nan)


def kcl_arrays(rs, rsh, kd, iph0, is0, g, t_c, v, i, plant: PlantConstants):
    """Log-form KCL residual ``f1``; NaN where the log argument is not positive."""
    i_ph, a, i_s, _ = derived_arrays(rs, rsh, kd, iph0, is0, g, t_c, plant)
    rs = np.asarray(rs, float)
    rsh = np.asarray(rsh, float)
    v = np.asarray(v, float)
    i = np.asarray(i, float)
    arg = (i_ph - i - (v + i * rs) / rsh) / i_s + 1.0
    with np.errstate(invalid="ignore", divide="ignore"):
        f1 = -v - i * rs + a * np.log(np.where(arg > 0.0, arg, np.nan))
    return np.where(arg > 0.0, f1, np.nan)


# ---------------------------------------------------------------------------
# Scalar API
# ---------------------------------------------------------------------------

def derive_quantities(params: PvParams, plant: PlantConstants, env: EnvInputs,
                      exact_omega: bool = False) -> DerivedQuantities:
    """Evaluate photocurrent, modified ideality factor, saturation current
    and the Lambert-W auxiliary value at one environmental condition."""
    i_ph, a, i_s, _ = derived_arrays(params.rs, params.rsh, params.kd, params.iph0,
                                     params.is0, env.g, env.t_c, plant)
    if exact_omega:
        arg = np.e * (float(i_ph) / float(i_s) + 1.0)
    else:
        arg = float(i_ph) * np.e / float(i_s)
    if not np.isfinite(arg) or arg < 0.0:
        raise DomainError(f"nonphysical Lambert-W argument {arg}")
    omega = lambert_w0(arg) if arg > 0.0 else 0.0
    return DerivedQuantities(i_ph=float(i_ph), a=float(a), i_s=float(i_s),
                             omega=float(omega))


def mpp_point(params: PvParams, plant: PlantConstants, env: EnvInputs,
              exact_omega: bool = False) -> OperatingPoint:
    """Closed-form operating point at the maximum power point.

    Dark inputs (g below the dark floor) return the zero-power point; an
    omega <= 1 under daylight input signals nonphysical parameters and raises
    DegenerateError.
    """
    if env.g < DARK_IRRADIANCE:
        return ZERO_POINT
    q = derive_quantities(params, plant, env, exact_omega=exact_omega)
    if q.omega <= 1.0:
        raise DegenerateError(f"omega = {q.omega} <= 1 (dark or nonphysical inputs)")
    v = (1.0 + params.rs / params.rsh) * q.a * (q.omega - 1.0) \
        - params.rs * q.i_ph * (1.0 - 1.0 / q.omega)
    i = q.i_ph * (1.0 - 1.0 / q.omega) - q.a * (q.omega - 1.0) / params.rsh
    return OperatingPoint.from_vi(v, i)


def current_at_voltage(params: PvParams, plant: PlantConstants, env: EnvInputs,
                       v: float, tol_scale: float = 1e-9,
                       max_iter: int = 100) -> float:
    """Solve the implicit single-diode equation for the current at ``v``."""
    i = current_arrays(params.rs, params.rsh, params.kd, params.iph0, params.is0,
                       env.g, env.t_c, np.asarray(v, float), plant,
                       tol_scale=tol_scale, max_iter=max_iter)
    i = float(i)
    if not np.isfinite(i):
        raise ConvergenceError(f"current solve did not converge at v={v}")
    return i


def kcl_residual(params: PvParams, plant: PlantConstants, env: EnvInputs,
                 v: float, i: float) -> float:
    """Log-form KCL residual; zero iff (v, i) lies on the model I-V curve.

    Raises InfeasibleError when the measured current exceeds the available
    photocurrent (log argument not positive).
    """
    f1 = kcl_arrays(params.rs, params.rsh, params.kd, params.iph0, params.is0,
                    env.g, env.t_c, v, i, plant)
    f1 = float(f1)
    if not np.isfinite(f1):
        raise InfeasibleError(
            f"measured current {i} A is inconsistent with photocurrent at g={env.g}")
    return f1
