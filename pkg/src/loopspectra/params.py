"""Loop fugacity parametrisation n = q + 1/q and the square-root branch."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field


def q_from_n(n: complex) -> complex:
    """Return q with n = q + 1/q.

    For real n in (-2, 2) this is exp(i*gamma) with gamma in (0, pi).  For
    real |n| >= 2 the root with |q| >= 1 is returned.
    """
    n = complex(n)
    if abs(n.imag) < 1e-15 and -2.0 < n.real < 2.0:
        return cmath.exp(1j * math.acos(n.real / 2.0))
    disc = cmath.sqrt(n * n - 4.0)
    q = (n + disc) / 2.0
    if abs(q) < 1.0:
        q = (n - disc) / 2.0
    return q


def minus_q_sqrt(q: complex) -> complex:
    """Branch of (-q)^(1/2) used everywhere: i * sqrt(q), principal sqrt.

    For q = exp(i gamma), gamma in (0, pi), this is exp(i pi beta^2 / 2) with
    beta^2 = 1 + gamma/pi, i.e. the half-angle of -q = exp(i pi beta^2).
    """
    return 1j * cmath.sqrt(complex(q))


def is_root_of_unity(q: complex, max_order: int = 200, tol: float = 1e-10) -> bool:
    if abs(abs(q) - 1.0) > tol:
        return False
    angle = cmath.phase(q) / (2 * math.pi)
    for m in range(1, max_order + 1):
        if abs(angle * m - round(angle * m)) < tol * m:
            return True
    return False


@dataclass(frozen=True)
class LoopParams:
    """Loop weight n, quantum parameter q and twist z for winding lines.

    ``z`` defaults to q, so that a non-contractible loop weighs z + 1/z = n.
    """

    n: complex
    q: complex
    z: complex = field(default=None)

    def __post_init__(self):
        if self.q == 0:
            raise ValueError("q must be nonzero")
        if abs(self.n - (self.q + 1 / self.q)) > 1e-12 * max(1.0, abs(self.n)):
            raise ValueError(f"n={self.n} does not match q + 1/q for q={self.q}")
        if self.z is None:
            object.__setattr__(self, "z", complex(self.q))

    @classmethod
    def from_n(cls, n, z=None, strict: bool = False) -> "LoopParams":
        q = q_from_n(n)
        if strict and is_root_of_unity(q):
            raise ValueError(f"q={q} is a root of unity")
        return cls(n=complex(n), q=q, z=z)

    @classmethod
    def from_q(cls, q, z=None) -> "LoopParams":
        q = complex(q)
        return cls(n=q + 1 / q, q=q, z=z)

    @property
    def sqrt_mq(self) -> complex:
        return minus_q_sqrt(self.q)

    @property
    def noncontractible_weight(self) -> complex:
        return self.z + 1 / self.z

    def with_z(self, z) -> "LoopParams":
        return LoopParams(n=self.n, q=self.q, z=z)
