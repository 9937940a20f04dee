"""Transforms: closed forms vs quadrature vs exact step sums, with certified tails."""

import math

import numpy as np
import pytest

from tauberlab import transform as tr
from tauberlab.arith import StepFunction
from tauberlab.errors import ContractError, DomainError, PrecisionError
from tauberlab.special import EvalTolerance, psi_entire
from tauberlab.transform import (
    TransformSpec,
    quadrature_tail_bound,
    step_sum_tail_bound,
    transform_integers,
    transform_primes,
    transform_quadrature,
    transform_step_sum,
    transform_weighted_primes,
)


def test_step_sum_is_the_exact_finite_transform(rng):
    S = StepFunction([2.0, 3.0, 5.0, 7.0], [1.0, 1.0, 1.0, 1.0])
    for _ in range(10):
        s = complex(rng.uniform(1.2, 3.0), rng.uniform(-10, 10))
        expect = sum(x ** (-s) for x in (2.0, 3.0, 5.0, 7.0)) / s
        assert abs(transform_step_sum(S, s) - expect) < 1e-13


def test_truncated_integers_bracket_the_closed_form(rng):
    """zeta(s)/s minus the finite step sum stays inside the certified tail."""
    X = 2000
    bps = np.arange(1.0, X + 1.0)
    S = StepFunction(bps, np.ones_like(bps))
    for _ in range(20):
        s = complex(rng.uniform(1.5, 3.0), rng.uniform(-10, 10))
        gap = abs(transform_integers(s) - transform_step_sum(S, s))
        assert gap <= step_sum_tail_bound(S, s, 1.0) + 1e-12


def test_step_sum_tail_rejection():
    S = StepFunction([2.0, 3.0], [1.0, 1.0])
    with pytest.raises(PrecisionError) as ei:
        transform_step_sum(S, 1.5 + 0j, growth_constant=1.0, tol=EvalTolerance(abs_tol=1e-10))
    assert ei.value.achieved > 1e-10


def test_singularity_split_matches_entire_part(rng):
    """Transform of the integer count minus its pole equals the psi remainder."""
    for eps in (0.01, 0.1):
        for _ in range(10):
            t = rng.uniform(-10, 10)
            s = complex(1.0 + eps, t)
            lhs = transform_integers(s) - 1.0 / (s - 1.0)
            assert abs(lhs - psi_entire(s)) < 1e-8


def _closed_form_sources(table):
    return [
        tr.source_identity(),
        tr.source_integers(),
        tr.source_primes_weighted(table),
        tr.source_sqrt_mix(2.0, 1.0),
        tr.source_log_oscillation(0.5),
        tr.source_slow_approach(),
        tr.source_single_jump(),
    ]


def test_quadrature_agrees_with_every_closed_form(small_table, rng):
    """|closed_form - quadrature| <= certified tail bound + 1e-6, per source."""
    for S in _closed_form_sources(small_table):
        U = min(18.0, S.u_cap)
        for _ in range(20):
            s = complex(rng.uniform(1.2, 3.0), rng.uniform(-10, 10))
            gap = abs(S.laplace(s) - transform_quadrature(S, s, U=U))
            allowance = quadrature_tail_bound(S, s, U) + 1e-6
            assert gap <= allowance, (S.label, s, gap, allowance)


def test_quadrature_is_vectorized_and_consistent(small_table):
    S = tr.source_integers()
    s = np.array([1.5 + 0j, 2.0 + 3j, 2.5 - 1j])
    batch = transform_quadrature(S, s, U=14.0)
    singles = np.array([transform_quadrature(S, v, U=14.0) for v in s])
    assert np.max(np.abs(batch - singles)) < 1e-13


def test_linearity_of_the_transform(rng):
    """sqrt_mix(2,1) - sqrt_mix(1,1) = identity, exactly, in closed form and quadrature."""
    A, B, X = tr.source_sqrt_mix(2.0, 1.0), tr.source_sqrt_mix(1.0, 1.0), tr.source_identity()
    for _ in range(10):
        s = complex(rng.uniform(1.3, 3.0), rng.uniform(-5, 5))
        assert abs(A.laplace(s) - B.laplace(s) - X.laplace(s)) < 1e-12
        q = (
            transform_quadrature(A, s, U=16.0)
            - transform_quadrature(B, s, U=16.0)
            - transform_quadrature(X, s, U=16.0)
        )
        assert abs(q) < 1e-9


def test_weighted_primes_is_minus_the_derivative(small_table):
    """Multiplying the source by u differentiates the transform in -s."""
    h = 1e-5
    for s0 in (2.0 + 0.5j, 1.8 - 2.0j, 2.5 + 0j):
        fd = -(transform_primes(s0 + h, small_table) - transform_primes(s0 - h, small_table)) / (2 * h)
        # G_w = (pzeta - s pzeta')/s^2 = -d/ds [pzeta/s]
        assert abs(transform_weighted_primes(s0, small_table) - fd) < 1e-6


def test_quadrature_guards(small_table):
    S = tr.source_primes_weighted(small_table)
    with pytest.raises(DomainError):
        transform_quadrature(S, 2.0 + 0j, U=S.u_cap + 1.0)
    with pytest.raises(DomainError):
        transform_quadrature(S, 2.0 + 0j, U=-1.0)
    with pytest.raises(PrecisionError) as ei:
        transform_quadrature(tr.source_integers(), 1.05 + 0j, U=10.0, tol=EvalTolerance(abs_tol=1e-10))
    assert "increase U" in str(ei.value)


def test_transform_spec_dispatch(small_table):
    s = 2.0 + 1.0j
    spec = TransformSpec(tr.source_integers(), "closed_form_integers")
    assert spec.evaluate(s) == pytest.approx(transform_integers(s), abs=1e-14)
    jump = tr.source_single_jump()
    spec2 = TransformSpec(jump, "step_sum")
    assert spec2.evaluate(s) == pytest.approx(jump.laplace(s), abs=1e-12)
    with pytest.raises(ContractError):
        TransformSpec(tr.source_identity(), "step_sum")  # no backing step function
    with pytest.raises(ContractError):
        TransformSpec(tr.source_identity(), "nonsense")
