"""Poincaré-ball operations.

The tensor kernels (``dist``, ``hyp_norm``, ``scale``, ``rotate``,
``project``) work on float64 torch tensors with coordinates in the last
dimension and are differentiable. The ``PoincarePoint`` functions
(``hdist``, ``hnorm``, ``hscale``, ``hrotate``, ``project_to_ball``) wrap them
for single points.

Curvature convention: the ball has radius ``1/sqrt(c)``. Scaling is defined
on the unit ball; for ``c != 1`` it is applied to ``sqrt(c) * x`` and mapped
back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch

DTYPE = torch.float64
ARTANH_MAX = 1.0 - 1e-12
_TINY = 1e-200


@dataclass(frozen=True)
class BallSpec:
    dim: int = 64
    curvature: float = 1.0
    eps: float = 1e-5

    def __post_init__(self) -> None:
        if self.dim <= 0 or self.dim % 2:
            raise ValueError(f"dimension must be a positive even integer, got {self.dim}")
        if not self.curvature > 0:
            raise ValueError(f"curvature must be positive, got {self.curvature}")
        if not 0 <= self.eps < self.radius:
            raise ValueError(f"eps must lie in [0, radius), got {self.eps}")

    @property
    def radius(self) -> float:
        return 1.0 / math.sqrt(self.curvature)

    @property
    def max_norm(self) -> float:
        return self.radius - self.eps

    def to_dict(self) -> dict:
        return {"dim": self.dim, "curvature": self.curvature, "eps": self.eps}


class SpecMismatchError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PoincarePoint:
    coords: np.ndarray
    spec: BallSpec

    def __post_init__(self) -> None:
        coords = np.array(self.coords, dtype=np.float64)
        if coords.shape != (self.spec.dim,):
            raise ValueError(f"expected {self.spec.dim} coordinates, got shape {coords.shape}")
        if not np.all(np.isfinite(coords)):
            raise ValueError("coordinates must be finite")
        if np.linalg.norm(coords) > self.spec.max_norm * (1 + 1e-12):
            raise ValueError("point lies outside the ball")
        coords.flags.writeable = False
        object.__setattr__(self, "coords", coords)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PoincarePoint):
            return NotImplemented
        return self.spec == other.spec and np.array_equal(self.coords, other.coords)

    def __hash__(self) -> int:
        return hash((self.spec, self.coords.tobytes()))

    def tensor(self) -> torch.Tensor:
        return torch.from_numpy(self.coords.copy())

    @classmethod
    def origin(cls, spec: BallSpec) -> "PoincarePoint":
        return cls(np.zeros(spec.dim), spec)


# ---------------------------------------------------------------------------
# tensor kernels


def _sqnorm(x: torch.Tensor) -> torch.Tensor:
    return (x * x).sum(-1)


def _safe_norm(x: torch.Tensor) -> torch.Tensor:
    return torch.sqrt(_sqnorm(x).clamp_min(_TINY))


def arcosh1p(z: torch.Tensor) -> torch.Tensor:
    """``arcosh(1 + z)`` for ``z >= 0`` (negative round-off clamped to 0)."""
    z = z.clamp_min(0.0)
    w = (z * (z + 2.0)).clamp_min(_TINY)
    # select on z == 0 rather than z > 0 so that NaN propagates
    return torch.where(z == 0, torch.zeros_like(z), torch.log1p(z + torch.sqrt(w)))


def dist(x: torch.Tensor, y: torch.Tensor, curvature: float) -> torch.Tensor:
    num = 2.0 * curvature * _sqnorm(x - y)
    den = (1.0 - curvature * _sqnorm(x)) * (1.0 - curvature * _sqnorm(y))
    return arcosh1p(num / den) / math.sqrt(curvature)


def hyp_norm(x: torch.Tensor, curvature: float) -> torch.Tensor:
    return dist(x, torch.zeros_like(x), curvature)


def clip_to_ball(x: torch.Tensor, max_norm: float) -> torch.Tensor:
    n = _safe_norm(x)
    factor = torch.where(n > max_norm, max_norm / n, torch.ones_like(n))
    return x * factor.unsqueeze(-1)


def scale(k: torch.Tensor | float, x: torch.Tensor, curvature: float, max_norm: float) -> torch.Tensor:
    """Hyperbolic scalar multiplication ``k ⊙ x`` along the ray through ``x``."""
    k = torch.as_tensor(k, dtype=x.dtype)
    sc = math.sqrt(curvature)
    n = _safe_norm(x) * sc
    factor = torch.tanh(k * torch.atanh(n.clamp_max(ARTANH_MAX))) / n
    return clip_to_ball(x * factor.unsqueeze(-1), max_norm)


def rotate(theta: torch.Tensor, x: torch.Tensor) -> torch.Tensor:
    """Block-diagonal rotation: pair ``(2i, 2i+1)`` is turned by ``theta[i]``."""
    if 2 * theta.shape[-1] != x.shape[-1]:
        raise ValueError(f"{theta.shape[-1]} angles cannot rotate {x.shape[-1]} coordinates")
    pairs = x.reshape(*x.shape[:-1], -1, 2)
    u, v = pairs[..., 0], pairs[..., 1]
    cos, sin = torch.cos(theta), torch.sin(theta)
    out = torch.stack((cos * u - sin * v, sin * u + cos * v), dim=-1)
    return out.reshape(x.shape)


def project(v: torch.Tensor, spec: BallSpec) -> torch.Tensor:
    """Map raw vectors into the ball: ``max_norm * tanh(|v|) * v / |v|``."""
    n = _safe_norm(v)
    return v * (spec.max_norm * torch.tanh(n) / n).unsqueeze(-1)


# ---------------------------------------------------------------------------
# point API


def _same_spec(x: PoincarePoint, y: PoincarePoint) -> BallSpec:
    if x.spec != y.spec:
        raise SpecMismatchError(f"points live in different balls: {x.spec} vs {y.spec}")
    return x.spec


def _point(t: torch.Tensor, spec: BallSpec) -> PoincarePoint:
    return PoincarePoint(t.detach().numpy().copy(), spec)


def hdist(x: PoincarePoint, y: PoincarePoint) -> float:
    spec = _same_spec(x, y)
    return float(dist(x.tensor(), y.tensor(), spec.curvature))


def hnorm(x: PoincarePoint) -> float:
    return hdist(x, PoincarePoint.origin(x.spec))


def hscale(k: float, x: PoincarePoint) -> PoincarePoint:
    spec = x.spec
    return _point(scale(float(k), x.tensor(), spec.curvature, spec.max_norm), spec)


def hrotate(theta, x: PoincarePoint) -> PoincarePoint:
    angles = torch.as_tensor(np.asarray(theta, dtype=np.float64))
    if angles.ndim != 1 or not torch.isfinite(angles).all():
        raise ValueError("rotation angles must be a finite 1-d array")
    return _point(rotate(angles, x.tensor()), x.spec)


def project_to_ball(v, spec: BallSpec) -> PoincarePoint:
    raw = np.asarray(v, dtype=np.float64)
    if raw.shape != (spec.dim,):
        raise ValueError(f"expected {spec.dim} coordinates, got shape {raw.shape}")
    if not np.all(np.isfinite(raw)):
        raise ValueError("cannot project non-finite coordinates")
    return _point(project(torch.from_numpy(raw.copy()), spec), spec)
