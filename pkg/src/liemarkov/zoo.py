"""Built-in substitution models.

DNA models over the state order A, G, C, T: HKY and the 8-parameter
Lie-algebra envelope that its products land in, plus the standard
companions JC, F81, K2P and GTR used as closed/not-closed contrast
cases. Also holds the reference HKY example (two generators and the
independently computed logarithm of the product of their substitution
matrices) that the golden tests and the repro-paper command pin.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import config
from .model import (
    PolynomialConstraint,
    RateModel,
    linear_constraint,
    product_constraint,
    register_parameterization,
)

NUCLEOTIDES = ("A", "G", "C", "T")

# Transition pairs under the A, G, C, T ordering: A<->G and C<->T.
_TRANSITIONS = ((0, 1), (1, 0), (2, 3), (3, 2))


def _with_diagonal(off) -> np.ndarray:
    """Fill the diagonal so each generator sum (column by default) is zero."""
    q = np.array(off, dtype=float)
    np.fill_diagonal(q, 0.0)
    np.fill_diagonal(q, -q.sum(axis=0))
    return config.from_column(q)


def _require_nonnegative(**params) -> None:
    for pname, value in params.items():
        if value < 0:
            raise ValueError(f"parameter {pname} must be non-negative, got {value}")


def hky(alpha_a: float, alpha_g: float, alpha_c: float, alpha_t: float, kappa: float) -> np.ndarray:
    """HKY generator: per-row base rates alpha_i, transitions scaled by kappa.

    Row i carries alpha_i off the diagonal, with the transition entries
    (A<->G, C<->T) multiplied by kappa and the diagonal balancing the sums.
    """
    _require_nonnegative(
        alpha_a=alpha_a, alpha_g=alpha_g, alpha_c=alpha_c, alpha_t=alpha_t, kappa=kappa
    )
    return _with_diagonal(
        [
            [0.0, kappa * alpha_a, alpha_a, alpha_a],
            [kappa * alpha_g, 0.0, alpha_g, alpha_g],
            [alpha_c, alpha_c, 0.0, kappa * alpha_c],
            [alpha_t, alpha_t, kappa * alpha_t, 0.0],
        ]
    )


def jc(mu: float) -> np.ndarray:
    """Jukes-Cantor generator: all substitutions at rate mu."""
    _require_nonnegative(mu=mu)
    return _with_diagonal(np.full((4, 4), mu))


def f81(alpha_a: float, alpha_g: float, alpha_c: float, alpha_t: float) -> np.ndarray:
    """F81 generator: row i constant at alpha_i off the diagonal (HKY at kappa=1)."""
    return hky(alpha_a, alpha_g, alpha_c, alpha_t, 1.0)


def k2p(alpha: float, beta: float) -> np.ndarray:
    """Kimura two-parameter generator: transitions at alpha, transversions at beta."""
    _require_nonnegative(alpha=alpha, beta=beta)
    off = np.full((4, 4), beta)
    for i, j in _TRANSITIONS:
        off[i, j] = alpha
    return _with_diagonal(off)


def lm88(alpha: float, beta: float, gamma: float, delta: float,
         kappa_1: float, kappa_2: float, kappa_3: float, kappa_4: float) -> np.ndarray:
    """Generator in the 8-parameter pattern that log-products of HKY matrices follow.

    Same row-pair structure as HKY but with the four transition rates
    kappa_1..kappa_4 free instead of tied to a common ratio.
    """
    _require_nonnegative(
        alpha=alpha, beta=beta, gamma=gamma, delta=delta,
        kappa_1=kappa_1, kappa_2=kappa_2, kappa_3=kappa_3, kappa_4=kappa_4,
    )
    return _with_diagonal(
        [
            [0.0, kappa_1, alpha, alpha],
            [kappa_2, 0.0, beta, beta],
            [gamma, gamma, 0.0, kappa_3],
            [delta, delta, kappa_4, 0.0],
        ]
    )


_GTR_PAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))


def gtr(s_ag: float, s_ac: float, s_at: float, s_gc: float, s_gt: float, s_ct: float,
        w_a: float, w_g: float, w_c: float, w_t: float) -> np.ndarray:
    """General time-reversible generator from exchangeabilities and frequency weights.

    The weights are normalized to stationary frequencies pi and the rate
    into state i from state j is s_ij * pi_i, which satisfies detailed
    balance by construction.
    """
    exch = (s_ag, s_ac, s_at, s_gc, s_gt, s_ct)
    weights = np.array([w_a, w_g, w_c, w_t], dtype=float)
    _require_nonnegative(
        s_ag=s_ag, s_ac=s_ac, s_at=s_at, s_gc=s_gc, s_gt=s_gt, s_ct=s_ct,
        w_a=w_a, w_g=w_g, w_c=w_c, w_t=w_t,
    )
    total = weights.sum()
    if total <= 0:
        raise ValueError("frequency weights must not all be zero")
    pi = weights / total
    off = np.zeros((4, 4))
    for s, (i, j) in zip(exch, _GTR_PAIRS):
        off[i, j] = s * pi[i]
        off[j, i] = s * pi[j]
    return _with_diagonal(off)


register_parameterization("hky", lambda p: hky(*p), 5)
register_parameterization("jc", lambda p: jc(*p), 1)
register_parameterization("f81", lambda p: f81(*p), 4)
register_parameterization("k2p", lambda p: k2p(*p), 2)
register_parameterization("lm88", lambda p: lm88(*p), 8)
register_parameterization("gtr", lambda p: gtr(*p), 10)


def _unit(k: int, size: int) -> list[float]:
    return [1.0 if i == k else 0.0 for i in range(size)]


def _hky_constraints() -> tuple[PolynomialConstraint, ...]:
    # Four row-pair equalities plus the full orbit of equal-ratio
    # quadratics; the first three quadratics already determine the model
    # on the open stratum, the last three close the degenerate one.
    linear = (
        linear_constraint((1, 3), (1, 4)),
        linear_constraint((2, 3), (2, 4)),
        linear_constraint((3, 1), (3, 2)),
        linear_constraint((4, 1), (4, 2)),
    )
    quadratic = (
        product_constraint([(1, 2), (2, 3)], [(2, 1), (1, 3)]),
        product_constraint([(3, 4), (1, 3)], [(1, 2), (3, 1)]),
        product_constraint([(4, 3), (1, 3)], [(1, 2), (4, 1)]),
        product_constraint([(3, 4), (2, 3)], [(2, 1), (3, 1)]),
        product_constraint([(4, 3), (2, 3)], [(2, 1), (4, 1)]),
        product_constraint([(4, 3), (3, 1)], [(3, 4), (4, 1)]),
    )
    return linear + quadratic


def _gtr_constraints() -> tuple[PolynomialConstraint, ...]:
    # Reversibility as cycle conditions: on every 3-cycle the product of
    # rates one way around equals the product the other way.
    triples = ((1, 2, 3), (1, 2, 4), (1, 3, 4), (2, 3, 4))
    out = []
    for i, j, k in triples:
        out.append(
            product_constraint([(i, j), (j, k), (k, i)], [(i, k), (k, j), (j, i)])
        )
    return tuple(out)


def hky_model() -> RateModel:
    """HKY as a constraint variety with its 5-parameter generator attached."""
    return RateModel(
        name="hky",
        n=4,
        constraints=_hky_constraints(),
        parameterization="hky",
        parameter_ranges=((0.001, 0.05),) * 4 + ((0.5, 2.0),),
    )


def lm88_model() -> RateModel:
    """The 8-dimensional span model enveloping HKY (one basis matrix per free rate)."""
    basis = tuple(lm88(*_unit(k, 8)) for k in range(8))
    return RateModel(
        name="lm88",
        n=4,
        basis=basis,
        parameterization="lm88",
        parameter_ranges=((0.001, 0.06),) * 8,
    )


def jc_model() -> RateModel:
    return RateModel(
        name="jc",
        n=4,
        basis=(jc(1.0),),
        parameterization="jc",
        parameter_ranges=((0.001, 0.05),),
    )


def f81_model() -> RateModel:
    basis = tuple(f81(*_unit(k, 4)) for k in range(4))
    return RateModel(
        name="f81",
        n=4,
        basis=basis,
        parameterization="f81",
        parameter_ranges=((0.001, 0.05),) * 4,
    )


def k2p_model() -> RateModel:
    return RateModel(
        name="k2p",
        n=4,
        basis=(k2p(1.0, 0.0), k2p(0.0, 1.0)),
        parameterization="k2p",
        parameter_ranges=((0.001, 0.05),) * 2,
    )


def gtr_model() -> RateModel:
    """GTR as a constraint variety; no span basis is declared on purpose.

    Closure audits of this model must argue from sampled witnesses, which
    exercises the constraints-only code path.
    """
    return RateModel(
        name="gtr",
        n=4,
        constraints=_gtr_constraints(),
        parameterization="gtr",
        parameter_ranges=((0.2, 0.6),) * 6 + ((0.1, 0.4),) * 4,
    )


@dataclass(frozen=True)
class ZooEntry:
    """A built-in model with its expected audit outcome.

    provenance is "reference" when the expectation is pinned by the
    built-in reference computation (see the repro-paper command) and
    "literature" when it is standard-model background.
    """

    builder: object
    expected_span_dim: int | None
    expected_closed: bool | None
    provenance: str


_ZOO: dict[str, ZooEntry] = {
    "hky": ZooEntry(hky_model, 8, False, "reference"),
    "lm88": ZooEntry(lm88_model, 8, True, "reference"),
    "jc": ZooEntry(jc_model, 1, True, "literature"),
    "f81": ZooEntry(f81_model, 4, True, "literature"),
    "k2p": ZooEntry(k2p_model, 2, True, "literature"),
    "gtr": ZooEntry(gtr_model, None, False, "literature"),
}


def zoo_names() -> list[str]:
    return list(_ZOO)


def zoo_entry(name: str) -> ZooEntry:
    try:
        return _ZOO[name]
    except KeyError:
        raise KeyError(f"unknown zoo model {name!r}; known: {', '.join(_ZOO)}") from None


def zoo_model(name: str) -> RateModel:
    return zoo_entry(name).builder()


# ---------------------------------------------------------------------------
# Reference example (column convention): two HKY generators and the
# independently computed principal logarithm of exp(Q1) @ exp(Q2). The
# log-product fits the lm88 pattern with the alpha values below but
# admits no single transition/transversion ratio.
# ---------------------------------------------------------------------------

REFERENCE_HKY_PARAMS = (
    (0.02, 0.01, 0.005, 0.009, 1.5),
    (0.03, 0.01, 0.006, 0.008, 1.4),
)

REFERENCE_LOG_PRODUCT = np.array(
    [
        [-0.0571752, 0.0718248, 0.0498348, 0.0498348],
        [0.0291051, -0.0998949, 0.0200951, 0.0200951],
        [0.0109967, 0.0109967, -0.0947047, 0.0158953],
        [0.0170734, 0.0170734, 0.0247748, -0.0858252],
    ]
)
REFERENCE_LOG_PRODUCT.flags.writeable = False

REFERENCE_ALPHAS = (0.0498348, 0.0200951, 0.0109967, 0.0170734)


def reference_pair() -> tuple[np.ndarray, np.ndarray]:
    """The two reference HKY generators, in column convention."""
    p1, p2 = REFERENCE_HKY_PARAMS
    saved = config.get_convention()
    config.set_convention("column")
    try:
        return hky(*p1), hky(*p2)
    finally:
        config.set_convention(saved)
