"""Problem data: PDE coefficients, the pointwise nonlinearity, and energies.

A problem is described by a scalar diffusion field and a sum of power
terms sum_p c_p(x) u^p with odd integer exponents; the Hamiltonian
constraint uses p in {1, 5, -3, -7} and the Yamabe examples use subsets
of {1, 5}.  Antiderivatives (the energy density) and derivatives are
generated mechanically from the same representation.

Coefficient fields are closures of position: they receive an (n, dim)
array of points and return n values, so sharp fields like 1/r^3 are
evaluated exactly at quadrature points with no interpolation error.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CoefficientViolation, NonpositiveState, UnknownExample


def constant_field(value):
    """Coefficient field equal to `value` everywhere."""
    value = float(value)

    def f(x):
        return np.full(np.atleast_2d(x).shape[0], value)

    f.constant_value = value
    return f


def radial_field(fn):
    """Coefficient field depending on r = |x| only."""

    def f(x):
        r = np.linalg.norm(np.atleast_2d(x), axis=1)
        return fn(r)

    return f


def _as_field(value):
    return value if callable(value) else constant_field(value)


@dataclass(frozen=True)
class ProblemSpec:
    """Coefficients of the semilinear problem

        -div(diffusion * grad u) + sum_p c_p(x) u^p = source(x)  in Omega
        diffusion * du/dn + robin_coeff * u = robin_data          on Robin part
        u = dirichlet_data                                        on Dirichlet part

    power_terms maps odd integer exponents p (p != -1) to coefficient
    fields c_p.  positivity_required demands u > 0 for every pointwise
    evaluation; independent of the flag, assemblies with a positive
    barrier parameter always require u > 0.
    """

    diffusion: object = field(default_factory=lambda: constant_field(1.0))
    power_terms: tuple = ()
    robin_coeff: object = field(default_factory=lambda: constant_field(0.0))
    robin_data: object = field(default_factory=lambda: constant_field(0.0))
    dirichlet_data: object = field(default_factory=lambda: constant_field(0.0))
    source: object = None
    positivity_required: bool = False

    def __post_init__(self):
        terms = []
        seen = set()
        for p, coeff in self.power_terms:
            p = int(p)
            if p % 2 == 0:
                raise ValueError(f"exponent {p} is even; only odd powers are supported")
            if p == -1:
                raise ValueError("exponent -1 has no power-law antiderivative")
            if p in seen:
                raise ValueError(f"duplicate exponent {p}")
            seen.add(p)
            terms.append((p, _as_field(coeff)))
        object.__setattr__(self, "power_terms", tuple(terms))
        for name in ("diffusion", "robin_coeff", "robin_data", "dirichlet_data"):
            object.__setattr__(self, name, _as_field(getattr(self, name)))
        if self.source is not None:
            object.__setattr__(self, "source", _as_field(self.source))

    @property
    def has_negative_powers(self):
        return any(p < 0 for p, _ in self.power_terms)

    @property
    def exponents(self):
        return tuple(p for p, _ in self.power_terms)


@dataclass
class FeFunction:
    """Coefficient vector over the P1 vertex basis."""

    coefficients: np.ndarray

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=float).ravel()

    @classmethod
    def constant(cls, mesh, value):
        return cls(np.full(mesh.num_vertices, float(value)))

    def copy(self):
        return FeFunction(self.coefficients.copy())

    def __len__(self):
        return len(self.coefficients)


def as_coefficients(u):
    """Accept an FeFunction or a plain array and return the raw vector."""
    if isinstance(u, FeFunction):
        return u.coefficients
    return np.asarray(u, dtype=float).ravel()


def _check_positive(spec, u):
    if spec.positivity_required and np.any(np.asarray(u) <= 0):
        raise NonpositiveState("evaluation at u <= 0 with positivity required")


def _pointwise(spec, x, u, term_fn):
    """Evaluate sum over power terms of term_fn(p, c_p(x), u)."""
    _check_positive(spec, u)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    u_arr = np.asarray(u, dtype=float)
    scalar = u_arr.ndim == 0 and np.asarray(x).shape[0] == 1
    out = np.zeros(np.broadcast(np.zeros(x.shape[0]), u_arr).shape)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for p, coeff in spec.power_terms:
            out = out + term_fn(p, coeff(x), u_arr)
    return float(out[0]) if scalar else out


def nonlinearity(spec, x, u):
    """k(u) = sum_p c_p(x) u^p, the zeroth-order part of the operator."""
    return _pointwise(spec, x, u, lambda p, c, v: c * v**p)


def nonlinearity_derivative(spec, x, u):
    """k'(u) = sum_p p c_p(x) u^(p-1)."""
    return _pointwise(spec, x, u, lambda p, c, v: p * c * v ** (p - 1))


def energy_density(spec, x, u):
    """Antiderivative sum_p c_p(x) u^(p+1)/(p+1); d/du of this is k(u)."""
    return _pointwise(spec, x, u, lambda p, c, v: c * v ** (p + 1) / (p + 1))


def energy_density_second_derivative(spec, u, x=None):
    """d^2/du^2 of the energy density: sum_p p c_p(x) u^(p-1).

    `x` defaults to the origin, which is only meaningful for spatially
    constant coefficient fields (the Figure-style 1D integrand use).
    """
    if x is None:
        x = np.zeros((1, 1))
    return nonlinearity_derivative(spec, x, u)


def lichnerowicz_spec(
    diffusion=1.0,
    scalar_curvature=0.0,
    tau=0.0,
    sigma=0.0,
    rho=0.0,
    robin_coeff=0.0,
    robin_data=0.0,
    dirichlet_data=0.0,
    positivity_required=False,
):
    """Hamiltonian-constraint coefficients in power-law form.

    k(u) = (R/8) u + (tau^2/12) u^5 - (sigma^2/8) u^-7 - 2 pi rho u^-3,
    with rho, sigma^2, tau^2 >= 0.  Scalar arguments become constant
    fields; callables are used as-is (tau/sigma/rho callables must
    return the already-squared combinations are not supported — pass
    explicit power_terms for exotic cases).
    """
    for name, value in (("sigma", sigma), ("rho", rho)):
        if not callable(value) and float(value) < 0:
            raise CoefficientViolation(f"{name} must be >= 0, got {value}")
    terms = [
        (1, constant_field(scalar_curvature / 8.0) if not callable(scalar_curvature) else scalar_curvature),
        (5, constant_field(tau**2 / 12.0) if not callable(tau) else tau),
        (-7, constant_field(-(sigma**2) / 8.0) if not callable(sigma) else sigma),
        (-3, constant_field(-2.0 * math.pi * rho) if not callable(rho) else rho),
    ]
    return ProblemSpec(
        diffusion=diffusion,
        power_terms=tuple(terms),
        robin_coeff=robin_coeff,
        robin_data=robin_data,
        dirichlet_data=dirichlet_data,
        positivity_required=positivity_required,
    )


def builtin_example(example_id, mesh_dim=3):
    """The four benchmark parameterizations.

    1: Hamiltonian constraint, a=1, R=1, tau=0.1, sigma=0.2, rho=0.1,
       Robin c=1, g=-1 on both boundaries.
    2: Hamiltonian constraint, a=2, R=-1000, tau=sqrt(72), sigma=sqrt(48),
       rho=1/pi, Robin c=2, g=10.
    3: Yamabe-type -8 Lap u + u^5/r^3 = 0, Dirichlet u=1.
    4: Yamabe-type -8 Lap u - u/8 + u^5/r^3 = 0, Dirichlet u=1.

    `mesh_dim` is accepted for interface symmetry; all coefficient
    closures are dimension independent (r is the Euclidean norm).
    """
    if example_id == 1:
        return lichnerowicz_spec(
            diffusion=1.0,
            scalar_curvature=1.0,
            tau=0.1,
            sigma=0.2,
            rho=0.1,
            robin_coeff=1.0,
            robin_data=-1.0,
        )
    if example_id == 2:
        # a=2, R=-1000, tau^2=72, sigma^2=48, rho=1/pi: the power-law
        # coefficients R/8, tau^2/12, -sigma^2/8, -2*pi*rho simplify to
        # exact integers, so build them directly.
        return ProblemSpec(
            diffusion=2.0,
            power_terms=((1, -125.0), (5, 6.0), (-7, -6.0), (-3, -2.0)),
            robin_coeff=2.0,
            robin_data=10.0,
        )
    if example_id == 3:
        return ProblemSpec(
            diffusion=8.0,
            power_terms=((5, radial_field(lambda r: r**-3)),),
            dirichlet_data=1.0,
        )
    if example_id == 4:
        return ProblemSpec(
            diffusion=8.0,
            power_terms=(
                (1, constant_field(-1.0 / 8.0)),
                (5, radial_field(lambda r: r**-3)),
            ),
            dirichlet_data=1.0,
        )
    raise UnknownExample(f"example id must be 1..4, got {example_id}")
