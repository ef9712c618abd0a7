"""Builtin maps and construction from config blocks."""

from __future__ import annotations

import math

import numpy as np

from .dynamics import Branch, MapModel
from .errors import ConfigError, DomainError

__all__ = [
    "paper_sqrt",
    "doubling",
    "tent",
    "linear_expanding",
    "piecewise_linear",
    "identity",
    "BUILTINS",
    "from_spec",
]


def _sqrt_func(x):
    s = np.where(x >= 0, 1.0, -1.0)
    return s * (2.0 * np.sqrt(np.abs(x)) - 1.0)


def _sqrt_deriv(x):
    return 1.0 / np.sqrt(np.abs(x))


def paper_sqrt() -> MapModel:
    """``f(x) = 2 sqrt(x) - 1`` for ``x >= 0`` and ``1 - 2 sqrt|x|`` otherwise.

    Lives on ``[-1, 1)`` with ``-1 ~ 1`` glued, so the neutral fixed points
    at both ends are one point of the circle.  ``|f'(x)| = |x|^(-1/2)``,
    hence ``S = {0}`` and ``beta = 1/2``.  Normalized Lebesgue measure is
    invariant.
    """
    return MapModel(
        name="paper-sqrt",
        func=_sqrt_func,
        deriv=_sqrt_deriv,
        lo=-1.0,
        hi=1.0,
        circle=True,
        singular_set=(0.0,),
        beta=0.5,
        branches=(
            Branch(lambda y: (1.0 + y) ** 2 / 4.0, -1.0, 1.0),
            Branch(lambda y: -((1.0 - y) ** 2) / 4.0, -1.0, 1.0),
        ),
    )


def linear_expanding(c: float, name: str = None) -> MapModel:
    """``x -> c x mod 1`` on the circle ``[0, 1)``, for ``c > 1``.

    Orbits are computed in binary floating point, so for even integer ``c``
    they collapse onto 0 after roughly 53 / log2(c) steps.  The derivative
    is constant, which is all hyperbolic-time detection looks at.
    """
    if not c > 1:
        raise DomainError(f"expansion factor must exceed 1, got {c}")
    c = float(c)
    n_branches = math.ceil(c)
    branches = tuple(
        Branch(lambda y, i=i: (y + i) / c, 0.0, min(1.0, c - i)) for i in range(n_branches)
    )
    return MapModel(
        name=name or f"linear-{c:g}",
        func=lambda x: np.mod(c * x, 1.0),
        deriv=lambda x: np.full(np.shape(x), c),
        lo=0.0,
        hi=1.0,
        circle=True,
        branches=branches,
    )


def doubling() -> MapModel:
    return linear_expanding(2.0, name="doubling")


def tent() -> MapModel:
    """Full tent map on ``[0, 1]``; the fold is not treated as singular."""
    return MapModel(
        name="tent",
        func=lambda x: 1.0 - np.abs(1.0 - 2.0 * x),
        deriv=lambda x: np.where(x < 0.5, 2.0, -2.0),
        lo=0.0,
        hi=1.0,
        branches=(
            Branch(lambda y: y / 2.0, 0.0, 1.0),
            Branch(lambda y: 1.0 - y / 2.0, 0.0, 1.0),
        ),
    )


def identity(lo: float = 0.0, hi: float = 1.0) -> MapModel:
    return MapModel(
        name="identity",
        func=lambda x: np.array(x, dtype=float, copy=True),
        deriv=lambda x: np.ones(np.shape(x)),
        lo=lo,
        hi=hi,
        branches=(Branch(lambda y: y, lo, hi),),
    )


def piecewise_linear(knots, singular_points=(), beta: float = 0.0,
                     name: str = "piecewise") -> MapModel:
    """Continuous piecewise-affine interval map through ``knots``.

    ``knots`` is a sequence of ``(x, y)`` pairs with strictly increasing
    ``x``; the domain is ``[x_first, x_last]``.  Each piece must have nonzero
    slope.
    """
    kx = np.array([float(k[0]) for k in knots])
    ky = np.array([float(k[1]) for k in knots])
    if kx.size < 2 or np.any(np.diff(kx) <= 0):
        raise DomainError("piecewise knots need at least two strictly increasing x values")
    slopes = np.diff(ky) / np.diff(kx)
    if np.any(slopes == 0):
        raise DomainError("piecewise map has a flat piece")

    def deriv(x):
        i = np.clip(np.searchsorted(kx, x, side="right") - 1, 0, slopes.size - 1)
        return slopes[i]

    branches = []
    for i, s in enumerate(slopes):
        x0, y0 = kx[i], ky[i]
        branches.append(Branch(lambda y, x0=x0, y0=y0, s=s: x0 + (y - y0) / s,
                               float(min(ky[i], ky[i + 1])), float(max(ky[i], ky[i + 1]))))
    fmap = MapModel(
        name=name,
        func=lambda x: np.interp(x, kx, ky),
        deriv=deriv,
        lo=float(kx[0]),
        hi=float(kx[-1]),
        singular_set=tuple(singular_points),
        beta=beta,
        branches=tuple(branches),
    )
    fmap.check()
    return fmap


BUILTINS = {
    "paper-sqrt": paper_sqrt,
    "doubling": doubling,
    "tent": tent,
    "linear": linear_expanding,
    "linear-expanding": linear_expanding,
    "identity": identity,
}


def _parse_params(params):
    if isinstance(params, dict):
        return params
    out = {}
    for item in str(params or "").split(";"):
        item = item.strip()
        if not item:
            continue
        key, _, value = item.partition("=")
        out[key.strip()] = value.strip()
    return out


def from_spec(spec: dict) -> MapModel:
    """Build a map from ``{name, kind, params, beta, singular_points}``.

    ``kind`` is ``builtin`` (``name`` picks the map; ``linear`` or
    ``linear-expanding`` takes ``params = "c=3"``) or ``piecewise``
    (``params = "knots=0:0,0.5:1,1:0"``).
    ``beta`` and ``singular_points`` override the builtin declarations.
    """
    kind = spec.get("kind", "builtin")
    name = spec.get("name")
    params = _parse_params(spec.get("params"))
    if kind == "builtin":
        if name not in BUILTINS:
            raise ConfigError([f"unknown builtin map {name!r}; choose from {sorted(BUILTINS)}"])
        if name in ("linear", "linear-expanding"):
            fmap = linear_expanding(float(params.get("c", 3.0)))
        else:
            fmap = BUILTINS[name]()
        overrides = {}
        if spec.get("beta") is not None:
            overrides["beta"] = float(spec["beta"])
        if spec.get("singular_points") is not None:
            overrides["singular_set"] = tuple(spec["singular_points"])
        if overrides:
            fields = {k: getattr(fmap, k) for k in fmap.__dataclass_fields__}
            fields.update(overrides)
            fmap = MapModel(**fields)
        return fmap
    if kind == "piecewise":
        raw = params.get("knots")
        if not raw:
            raise ConfigError(["piecewise map needs params knots=x:y,x:y,..."])
        knots = [tuple(float(v) for v in pair.split(":")) for pair in raw.split(",")]
        return piecewise_linear(
            knots,
            singular_points=tuple(spec.get("singular_points") or ()),
            beta=float(spec.get("beta") or 0.0),
            name=name or "piecewise",
        )
    raise ConfigError([f"map kind must be builtin or piecewise, got {kind!r}"])
