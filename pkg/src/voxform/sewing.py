"""Two-sphere sewing geometry: exact domain validation and Moebius data.

All radii and points are exact, so every inequality below is decided
exactly (squared moduli over the rationals); nothing here needs floats.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .scalars import ApproxScalar, ExactScalar, VoxformError, sqrt_exact_or_approx

__all__ = [
    "SphereConfig",
    "ValidityReport",
    "InvalidConfig",
    "validate_config",
    "sewing_partner",
    "mobius_gamma",
    "MobiusMap",
]


class InvalidConfig(VoxformError):
    """A sewing configuration violates a domain constraint."""


@dataclass
class SphereConfig:
    """Radii, sewing parameter, annulus coordinates and marked points."""

    r1: Fraction
    r2: Fraction
    epsilon: ExactScalar
    zeta1: ExactScalar
    zeta2: ExactScalar
    x_points: list[ExactScalar] = field(default_factory=list)
    y_points: list[ExactScalar] = field(default_factory=list)

    def __post_init__(self):
        self.r1 = Fraction(self.r1)
        self.r2 = Fraction(self.r2)
        self.epsilon = ExactScalar.coerce(self.epsilon)
        self.zeta1 = ExactScalar.coerce(self.zeta1)
        self.zeta2 = ExactScalar.coerce(self.zeta2)
        self.x_points = [ExactScalar.coerce(z) for z in self.x_points]
        self.y_points = [ExactScalar.coerce(z) for z in self.y_points]


@dataclass
class ValidityReport:
    valid: bool
    violations: list[str]

    def as_dict(self) -> dict:
        return {"valid": self.valid, "violations": list(self.violations)}


def validate_config(cfg: SphereConfig) -> ValidityReport:
    """Check every sewing-domain inequality; report each violation by name.

    RadiusProduct   |epsilon| <= r1 r2
    SewingRelation  zeta1 * zeta2 == epsilon (exact)
    AnnulusZeta     |eps|/r_abar <= |zeta_a| <= r_a for a = 1, 2
    XPointBound     |x_i| >= |eps| / r2
    YPointBound     |y_j| >= |eps| / r1
    DistinctPoints  all marked points pairwise distinct
    """
    v: list[str] = []
    eps2 = cfg.epsilon.abs_squared()
    if cfg.r1 <= 0 or cfg.r2 <= 0:
        v.append("RadiusPositive: radii must be positive")
    if not eps2 <= (cfg.r1 * cfg.r2) ** 2:
        v.append("RadiusProduct: |epsilon| <= r1*r2 violated")
    if cfg.zeta1 * cfg.zeta2 != cfg.epsilon:
        v.append("SewingRelation: zeta1*zeta2 == epsilon violated")
    for name, zeta, ra, rb in (("zeta1", cfg.zeta1, cfg.r1, cfg.r2),
                               ("zeta2", cfg.zeta2, cfg.r2, cfg.r1)):
        z2 = zeta.abs_squared()
        if z2 == 0:
            v.append(f"AnnulusZeta: {name} = 0")
            continue
        if not z2 <= ra * ra:
            v.append(f"AnnulusZeta: |{name}| <= r violated")
        if rb > 0 and not z2 * (rb * rb) >= eps2:
            v.append(f"AnnulusZeta: |{name}| >= |eps|/r violated")
    for i, x in enumerate(cfg.x_points):
        if cfg.r2 > 0 and not x.abs_squared() * (cfg.r2 * cfg.r2) >= eps2:
            v.append(f"XPointBound: |x_{i}| >= |eps|/r2 violated")
    for j, y in enumerate(cfg.y_points):
        if cfg.r1 > 0 and not y.abs_squared() * (cfg.r1 * cfg.r1) >= eps2:
            v.append(f"YPointBound: |y_{j}| >= |eps|/r1 violated")
    pts = cfg.x_points + cfg.y_points
    seen = set()
    for z in pts:
        key = (z.re, z.im)
        if key in seen:
            v.append(f"DistinctPoints: repeated point {z}")
        seen.add(key)
    return ValidityReport(not v, v)


def sewing_partner(zeta1: ExactScalar, epsilon: ExactScalar) -> ExactScalar:
    """zeta2 = epsilon / zeta1 (the annulus identification)."""
    zeta1 = ExactScalar.coerce(zeta1)
    if zeta1.is_zero():
        raise InvalidConfig("zeta1 must be nonzero")
    return ExactScalar.coerce(epsilon) / zeta1


@dataclass
class MobiusMap:
    """z -> -lambda^2 / z."""

    lam: ExactScalar | ApproxScalar

    def coefficient(self):
        """-lambda^2 as a scalar (exact when lambda is)."""
        return -(self.lam * self.lam)

    def apply(self, z: ExactScalar):
        if hasattr(z, "is_zero") and z.is_zero():
            raise InvalidConfig("Moebius map has a pole at the origin")
        if isinstance(self.lam, ExactScalar) and isinstance(z, ExactScalar):
            return self.coefficient() * z.inverse()
        return self.coefficient() * (ApproxScalar(1) / ApproxScalar(z))


def mobius_gamma(lam) -> MobiusMap:
    if hasattr(lam, "is_zero") and lam.is_zero():
        raise InvalidConfig("lambda must be nonzero")
    return MobiusMap(lam)


def mobius_from_epsilon(epsilon: ExactScalar, xi_sign: int = +1):
    """The sewing Moebius map with lambda = -xi sqrt(epsilon), xi in {+i, -i};
    both signs give -lambda^2 = epsilon, i.e. the map z -> epsilon / z."""
    root = sqrt_exact_or_approx(ExactScalar.coerce(epsilon))
    if isinstance(root, ExactScalar):
        lam = ExactScalar(0, -xi_sign) * root  # -xi * sqrt(eps), xi = xi_sign * i
        return MobiusMap(lam)
    return MobiusMap(ApproxScalar(0) - ApproxScalar(complex(0, xi_sign)) * root)
