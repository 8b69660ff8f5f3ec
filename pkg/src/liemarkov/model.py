"""Markov model representation.

A model is a set of stochastic rate matrices cut out of the zero-sum
space either by a linear span basis, by polynomial constraints on the
off-diagonal entries, or both, optionally with a named parameterization
for seeded sampling. Models are immutable after construction and safe to
share across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import config
from .linalg import (
    DEFAULT_MEMBERSHIP_TOL,
    MembershipResult,
    check_square,
    frobenius,
    least_squares_membership,
)


class SamplingError(RuntimeError):
    """A seeded sampler could not produce a valid stochastic rate matrix."""


class ModelFormatError(ValueError):
    """A model file or dictionary does not follow the model format."""


@dataclass(frozen=True)
class PolynomialConstraint:
    """Polynomial in the off-diagonal entries q_ij, stored as coefficient-monomial terms.

    ``terms`` is a tuple of (coefficient, monomial) pairs where each
    monomial is a tuple of 1-based (i, j) index pairs with i != j; the
    empty monomial is a constant term. Evaluation at Q is
    sum(coeff * prod(q_ij)).
    """

    terms: tuple[tuple[float, tuple[tuple[int, int], ...]], ...]

    def __post_init__(self):
        norm = []
        for coeff, monomial in self.terms:
            pairs = tuple((int(i), int(j)) for i, j in monomial)
            for i, j in pairs:
                if i < 1 or j < 1:
                    raise ValueError(f"constraint indices are 1-based, got ({i}, {j})")
                if i == j:
                    raise ValueError("constraints only involve off-diagonal entries")
            norm.append((float(coeff), pairs))
        object.__setattr__(self, "terms", tuple(norm))

    @property
    def degree(self) -> int:
        return max((len(m) for _, m in self.terms), default=0)

    @property
    def homogeneous(self) -> bool:
        lengths = {len(m) for _, m in self.terms}
        return len(lengths) <= 1

    def evaluate(self, q) -> float:
        q = np.asarray(q, dtype=float)
        n = q.shape[0]
        total = 0.0
        for coeff, monomial in self.terms:
            prod = coeff
            for i, j in monomial:
                if i > n or j > n:
                    raise IndexError(
                        f"constraint index ({i}, {j}) out of range for order {n}"
                    )
                prod *= q[i - 1, j - 1]
            total += prod
        return float(total)


def linear_constraint(plus: tuple[int, int], minus: tuple[int, int]) -> PolynomialConstraint:
    """The equality q_plus = q_minus as a degree-1 constraint."""
    return PolynomialConstraint(((1.0, (plus,)), (-1.0, (minus,))))


def product_constraint(left: Sequence[tuple[int, int]], right: Sequence[tuple[int, int]]) -> PolynomialConstraint:
    """The equality prod(q_left) = prod(q_right) as a homogeneous constraint."""
    return PolynomialConstraint(((1.0, tuple(left)), (-1.0, tuple(right))))


# Named parameterizations (filled in by the zoo module on import).
_PARAMETERIZATIONS: dict[str, tuple[Callable[[Sequence[float]], np.ndarray], int]] = {}


def register_parameterization(name: str, fn: Callable[[Sequence[float]], np.ndarray], n_params: int) -> None:
    _PARAMETERIZATIONS[name] = (fn, n_params)


def get_parameterization(name: str) -> tuple[Callable[[Sequence[float]], np.ndarray], int]:
    try:
        return _PARAMETERIZATIONS[name]
    except KeyError:
        raise ModelFormatError(f"unknown parameterization {name!r}") from None


@dataclass(frozen=True, eq=False)
class RateModel:
    """A named Markov model over n states.

    ``basis`` spans the model's rate space when that space is linear;
    ``constraints`` define it as a variety otherwise (both may be
    present, in which case the basis decides membership and must satisfy
    every constraint). ``parameterization`` names a registered generator
    used together with ``parameter_ranges`` for seeded sampling.
    """

    name: str
    n: int
    basis: tuple[np.ndarray, ...] = ()
    constraints: tuple[PolynomialConstraint, ...] = ()
    parameterization: str | None = None
    parameter_ranges: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("model order must be at least 2")
        mats = []
        for b in self.basis:
            b = check_square(b)
            if b.shape[0] != self.n:
                raise ValueError("basis matrix order does not match the model")
            if not is_in_L(b, tol=1e-10 * max(1.0, frobenius(b))):
                raise ValueError("basis matrices must have zero generator sums")
            b = b.copy()
            b.flags.writeable = False
            mats.append(b)
        object.__setattr__(self, "basis", tuple(mats))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if self.basis and self.constraints:
            for b in self.basis:
                for c in self.constraints:
                    if abs(c.evaluate(np.asarray(b))) > 1e-12:
                        raise ValueError(
                            "basis matrices must satisfy the declared constraints"
                        )
        if self.parameter_ranges is not None:
            ranges = tuple((float(lo), float(hi)) for lo, hi in self.parameter_ranges)
            for lo, hi in ranges:
                if not lo <= hi:
                    raise ValueError(f"invalid parameter range ({lo}, {hi})")
            object.__setattr__(self, "parameter_ranges", ranges)

    @property
    def samplable(self) -> bool:
        return bool(self.basis) or (
            self.parameterization is not None and self.parameter_ranges is not None
        )


def is_in_L(q, tol: float = 1e-12) -> bool:
    """True when every generator sum of q (columns by default) is zero within tol."""
    q = check_square(q)
    sums = q.sum(axis=config.sum_axis())
    return bool(np.max(np.abs(sums)) <= tol)


def is_stochastic_rate(q, tol: float = 1e-12) -> bool:
    """True when q is a valid rate matrix: zero sums and off-diagonals >= -tol."""
    q = check_square(q)
    if not is_in_L(q, tol):
        return False
    off = q[~np.eye(q.shape[0], dtype=bool)]
    return bool(np.min(off) >= -tol)


def evaluate_constraints(model: RateModel, q) -> list[float]:
    """Raw residuals f_k(q) of the model's constraints, in declaration order."""
    if not model.constraints:
        raise ValueError(f"model {model.name!r} has no constraints")
    q = check_square(q)
    if q.shape[0] != model.n:
        raise ValueError("matrix order does not match the model")
    return [c.evaluate(q) for c in model.constraints]


def constraints_homogeneous(model: RateModel) -> bool | None:
    """Whether every defining constraint is homogeneous; None without constraints."""
    if not model.constraints:
        return None
    return all(c.homogeneous for c in model.constraints)


def _scaled_constraint_residuals(model: RateModel, q: np.ndarray) -> list[float]:
    # Homogeneous degree-d residuals are divided by ||q||^d so the
    # membership decision is invariant under positive rescaling of q.
    nrm = frobenius(q)
    out = []
    for c in model.constraints:
        raw = abs(c.evaluate(q))
        if c.homogeneous and c.degree > 0 and nrm > 0.0:
            out.append(raw / nrm ** c.degree)
        else:
            out.append(raw)
    return out


def model_residual(model: RateModel, q, tol: float = DEFAULT_MEMBERSHIP_TOL) -> float:
    """Scale-invariant residual of q against the model's rate space."""
    q = check_square(q)
    if model.basis:
        return least_squares_membership(q, model.basis, tol).residual
    if model.constraints:
        return max(_scaled_constraint_residuals(model, q), default=0.0)
    raise ValueError(f"model {model.name!r} has neither a basis nor constraints")


class Membership(NamedTuple):
    """Verdict of a model membership test.

    ``detail`` is a MembershipResult for span-basis models and the raw
    constraint residual list for constraint-defined models.
    """

    in_r: bool
    in_r_plus: bool
    detail: MembershipResult | list[float]


def membership(model: RateModel, q, tol: float = DEFAULT_MEMBERSHIP_TOL) -> Membership:
    """Test membership of q in the model's rate space and stochastic cone.

    Span membership decides when a basis is declared; otherwise the
    constraint residuals do (scale-normalized for the decision, raw in
    the returned detail).
    """
    q = check_square(q)
    if q.shape[0] != model.n:
        raise ValueError("matrix order does not match the model")
    if model.basis:
        detail: MembershipResult | list[float] = least_squares_membership(q, model.basis, tol)
        in_r = detail.inside
    elif model.constraints:
        detail = evaluate_constraints(model, q)
        in_r = max(_scaled_constraint_residuals(model, q), default=0.0) <= tol
    else:
        raise ValueError(f"model {model.name!r} has neither a basis nor constraints")
    in_r_plus = bool(in_r and is_stochastic_rate(q, tol))
    return Membership(bool(in_r), in_r_plus, detail)


def sample_with_rng(model: RateModel, rng: np.random.Generator, max_attempts: int = 1000) -> np.ndarray:
    """Draw one stochastic rate matrix from the model using rng."""
    if model.parameterization is not None and model.parameter_ranges is not None:
        fn, n_params = get_parameterization(model.parameterization)
        if len(model.parameter_ranges) != n_params:
            raise SamplingError(
                f"model {model.name!r} declares {len(model.parameter_ranges)} ranges "
                f"but parameterization {model.parameterization!r} takes {n_params}"
            )
        for _ in range(max_attempts):
            params = [float(rng.uniform(lo, hi)) for lo, hi in model.parameter_ranges]
            q = fn(params)
            if is_stochastic_rate(q, 1e-12) and membership(model, q, 1e-10).in_r:
                return q
        raise SamplingError(
            f"parameterized sampler for {model.name!r} failed {max_attempts} times"
        )
    if model.basis:
        k = len(model.basis)
        stack = np.stack([np.asarray(b) for b in model.basis])
        for _ in range(max_attempts):
            coeffs = rng.uniform(-1.0, 1.0, size=k)
            q = np.tensordot(coeffs, stack, axes=1)
            if is_stochastic_rate(q, 1e-12):
                return q
        raise SamplingError(
            f"sampler could not reach the stochastic cone of {model.name!r} "
            f"in {max_attempts} attempts"
        )
    raise SamplingError(f"model {model.name!r} has no parameterization or basis to sample")


def sample_stochastic(model: RateModel, seed: int) -> np.ndarray:
    """Deterministic seeded draw from the model's stochastic cone."""
    return sample_with_rng(model, np.random.default_rng(seed))


def check_scaling_closure(model: RateModel, samples: int = 20, seed: int = 0) -> bool:
    """Check closure under non-negative scalar multiplication.

    Returns False immediately when a defining constraint is
    inhomogeneous (the exact algebraic criterion); otherwise verifies on
    seeded samples that alpha * Q stays in the model for
    alpha in {0, 0.5, 2, 10}.
    """
    if model.constraints and not all(c.homogeneous for c in model.constraints):
        return False
    for i in range(samples):
        q = sample_stochastic(model, seed + i)
        for alpha in (0.0, 0.5, 2.0, 10.0):
            if not membership(model, alpha * q, 1e-8).in_r:
                return False
    return True


# ---------------------------------------------------------------------------
# Model file format (JSON). Matrices are flat row-major lists; constraint
# indices are 1-based (i, j) pairs. Either "basis" or "constraints" (or
# both) must be present.
# ---------------------------------------------------------------------------

def model_to_dict(model: RateModel) -> dict:
    """Serialize a model in the model file format, in the active convention."""
    doc: dict = {
        "name": model.name,
        "n": model.n,
        "convention": config.get_convention(),
    }
    if model.basis:
        doc["basis"] = [[float(x) for x in np.asarray(b).reshape(-1)] for b in model.basis]
    if model.constraints:
        doc["constraints"] = [
            {
                "terms": [
                    {"coeff": coeff, "monomial": [[i, j] for i, j in monomial]}
                    for coeff, monomial in c.terms
                ]
            }
            for c in model.constraints
        ]
    doc["parameterization"] = model.parameterization
    if model.parameter_ranges is not None:
        doc["parameter_ranges"] = [[lo, hi] for lo, hi in model.parameter_ranges]
    return doc


def model_from_dict(doc: dict) -> RateModel:
    """Build a RateModel from the model file format, converting conventions."""
    try:
        name = str(doc["name"])
        n = int(doc["n"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"model file missing or invalid name/n: {exc}") from exc
    file_convention = doc.get("convention", "column")
    if file_convention not in ("column", "row"):
        raise ModelFormatError(f"unknown convention {file_convention!r}")
    transpose = file_convention != config.get_convention()

    basis = []
    for flat in doc.get("basis", []) or []:
        arr = np.asarray(flat, dtype=float)
        if arr.size != n * n:
            raise ModelFormatError(
                f"basis matrix has {arr.size} entries, expected {n * n}"
            )
        mat = arr.reshape(n, n)
        basis.append(mat.T.copy() if transpose else mat)

    constraints = []
    for cdoc in doc.get("constraints", []) or []:
        try:
            terms = tuple(
                (
                    float(t["coeff"]),
                    tuple(
                        ((int(j), int(i)) if transpose else (int(i), int(j)))
                        for i, j in t["monomial"]
                    ),
                )
                for t in cdoc["terms"]
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelFormatError(f"malformed constraint: {exc}") from exc
        try:
            constraints.append(PolynomialConstraint(terms))
        except ValueError as exc:
            raise ModelFormatError(str(exc)) from exc

    if not basis and not constraints:
        raise ModelFormatError("model file must declare a basis or constraints")

    parameterization = doc.get("parameterization")
    if parameterization is not None:
        parameterization = str(parameterization)
        get_parameterization(parameterization)  # fail fast on unknown names
    ranges = doc.get("parameter_ranges")
    if ranges is not None:
        ranges = tuple((float(lo), float(hi)) for lo, hi in ranges)

    try:
        return RateModel(
            name=name,
            n=n,
            basis=tuple(basis),
            constraints=tuple(constraints),
            parameterization=parameterization,
            parameter_ranges=ranges,
        )
    except ValueError as exc:
        raise ModelFormatError(str(exc)) from exc


def save_model(model: RateModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=2)
        fh.write("\n")


def load_model(path) -> RateModel:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ModelFormatError("model file must contain a JSON object")
    return model_from_dict(doc)
