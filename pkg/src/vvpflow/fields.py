"""Analytic fields for experiments and verification.

All field callables follow one convention: ``f(points, t)`` with
``points`` an (n, 3) array returns an (n, 3) array for vector fields or
an (n,) array for scalars.  Time-independent fields still accept ``t``.

The exponential-trigonometric family ``ethier_*`` (two parameters a, d,
decay exp(-d^2 t)) is an exact unforced solution of the incompressible
flow equations at unit viscosity: it is divergence-free, Beltrami (the
vorticity is parallel to the velocity, so the rotational convection term
vanishes pointwise), and the time derivative cancels the viscous term.
Its total-head (Bernoulli) pressure is identically zero, which the
symbolic construction below rederives rather than assumes.
"""
from __future__ import annotations

import numpy as np

__all__ = [
    "ethier_velocity",
    "ethier_vorticity",
    "ethier_bernoulli_pressure",
    "ethier_momentum_residual",
    "stokes_mms_fields",
    "zero_vector_field",
    "zero_scalar_field",
    "gradient_of_power",
]

_ethier_cache: dict = {}
_mms_cache: dict = {}


def zero_vector_field(points, t=0.0):
    points = np.asarray(points, dtype=float)
    return np.zeros_like(points)


def zero_scalar_field(points, t=0.0):
    points = np.asarray(points, dtype=float)
    return np.zeros(points.shape[0])


def _sympy_curl(F, xyz):
    import sympy as sp

    x, y, z = xyz
    return sp.Matrix(
        [
            sp.diff(F[2], y) - sp.diff(F[1], z),
            sp.diff(F[0], z) - sp.diff(F[2], x),
            sp.diff(F[1], x) - sp.diff(F[0], y),
        ]
    )


def _lambdify_vector(exprs, symbols):
    import sympy as sp

    funcs = [sp.lambdify(symbols, e, modules="numpy") for e in exprs]

    def field(points, t=0.0):
        points = np.asarray(points, dtype=float)
        n = points.shape[0]
        cols = []
        for f in funcs:
            v = np.asarray(f(points[:, 0], points[:, 1], points[:, 2], t), dtype=float)
            cols.append(np.broadcast_to(v, (n,)))
        return np.stack(cols, axis=1)

    return field


def _lambdify_scalar(expr, symbols):
    import sympy as sp

    f = sp.lambdify(symbols, expr, modules="numpy")

    def field(points, t=0.0):
        points = np.asarray(points, dtype=float)
        v = np.asarray(f(points[:, 0], points[:, 1], points[:, 2], t), dtype=float)
        return np.broadcast_to(v, (points.shape[0],)).copy()

    return field


def _build_ethier(a, d):
    import sympy as sp

    x, y, z, t = sp.symbols("x y z t", real=True)
    E, S, C = sp.exp, sp.sin, sp.cos
    decay = E(-(d**2) * t)
    u = (
        sp.Matrix(
            [
                -a * (E(a * x) * S(a * y + d * z) + E(a * z) * C(a * x + d * y)),
                -a * (E(a * y) * S(a * z + d * x) + E(a * x) * C(a * y + d * z)),
                -a * (E(a * z) * S(a * x + d * y) + E(a * y) * C(a * z + d * x)),
            ]
        )
        * decay
    )
    w = _sympy_curl(u, (x, y, z))
    # Lamb-form momentum misfit at unit viscosity, excluding the pressure
    # gradient.  For this family it simplifies to zero, so the Bernoulli
    # pressure is a constant, normalized to zero.
    misfit = u.diff(t) + w.cross(u) + _sympy_curl(w, (x, y, z))
    misfit = misfit.applyfunc(lambda e: sp.simplify(sp.expand_trig(sp.expand(e))))
    syms = (x, y, z, t)
    entry = {
        "velocity": _lambdify_vector(list(u), syms),
        "vorticity": _lambdify_vector(list(w), syms),
        "momentum_misfit": _lambdify_vector(list(misfit), syms),
        "misfit_is_zero": misfit == sp.zeros(3, 1),
    }
    return entry


def _ethier(a, d):
    key = (float(a), float(d))
    if key not in _ethier_cache:
        _ethier_cache[key] = _build_ethier(*key)
    return _ethier_cache[key]


def ethier_velocity(a, d):
    """Exact velocity; parameters a (amplitude) and d (decay)."""
    return _ethier(a, d)["velocity"]


def ethier_vorticity(a, d):
    """Exact vorticity, the curl of :func:`ethier_velocity`."""
    return _ethier(a, d)["vorticity"]


def ethier_bernoulli_pressure(a, d):
    """Exact total-head pressure, identically zero for this family."""
    entry = _ethier(a, d)
    if not entry["misfit_is_zero"]:
        raise ValueError(
            f"momentum balance of the (a={a}, d={d}) field does not close "
            "with a constant Bernoulli pressure"
        )
    return zero_scalar_field


def ethier_momentum_residual(a, d, nu=1.0):
    """Pointwise residual of the unforced momentum equation.

    Returns a field callable giving u_t + omega x u + nu curl(omega)
    plus grad of the (zero) Bernoulli pressure.  Used as the oracle that
    the exact solution really solves the equations with no body force.
    """
    entry = _ethier(a, d)
    misfit = entry["momentum_misfit"]
    if nu == 1.0:
        return misfit

    velocity = entry["velocity"]

    def residual(points, t=0.0):
        # curl(omega) = d^2 u for this family, so viscosities other than
        # one leave (nu - 1) d^2 u uncancelled.
        return misfit(points, t) + (nu - 1.0) * float(d) ** 2 * velocity(points, t)

    return residual


def gradient_of_power(gamma, domain_volume_moment):
    """Gradient field of z**gamma scaled by a normalization constant.

    ``domain_volume_moment`` is the integral of z**gamma over the
    domain; the returned field is grad(z**gamma) / that integral.
    """
    gamma = int(gamma)
    if gamma < 1:
        raise ValueError("gamma must be a positive integer")
    c = float(domain_volume_moment)

    def field(points, t=0.0):
        points = np.asarray(points, dtype=float)
        out = np.zeros_like(points)
        out[:, 2] = gamma * points[:, 2] ** (gamma - 1) / c
        return out

    return field


def stokes_mms_fields(nu=1.0):
    """Manufactured steady Stokes solution on the unit box.

    Velocity is the curl of a trigonometric potential (hence exactly
    divergence-free, with zero normal trace on the unit box), pressure
    is a mean-zero cosine product, and the forcing
    ``f = nu curl(curl u) + grad p`` is derived symbolically.
    Returns a dict with velocity, vorticity, vorticity_curl, pressure,
    forcing.
    """
    key = float(nu)
    if key in _mms_cache:
        return _mms_cache[key]
    import sympy as sp

    x, y, z, t = sp.symbols("x y z t", real=True)
    pi = sp.pi
    potential = sp.Matrix(
        [
            sp.sin(pi * y) * sp.sin(pi * z),
            sp.sin(pi * z) * sp.sin(pi * x),
            sp.sin(pi * x) * sp.sin(pi * y),
        ]
    )
    u = _sympy_curl(potential, (x, y, z))
    w = _sympy_curl(u, (x, y, z))
    p = sp.cos(pi * x) * sp.cos(pi * y) * sp.cos(pi * z)
    f = key * _sympy_curl(w, (x, y, z)) + sp.Matrix(
        [sp.diff(p, x), sp.diff(p, y), sp.diff(p, z)]
    )
    syms = (x, y, z, t)
    fields = {
        "velocity": _lambdify_vector(list(u), syms),
        "vorticity": _lambdify_vector(list(w), syms),
        "vorticity_curl": _lambdify_vector(list(_sympy_curl(w, (x, y, z))), syms),
        "pressure": _lambdify_scalar(p, syms),
        "forcing": _lambdify_vector(list(f), syms),
    }
    _mms_cache[key] = fields
    return fields
