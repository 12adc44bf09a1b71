"""Both kernel backends against each other and against plain loops."""
import math

import numpy as np
import pytest

from crossloss import _backend
from crossloss.blend import simplex_lattice

from conftest import BACKENDS


def loop_blend_losses(preds, act, weights, p, q, group, totals, check_nonneg):
    out = []
    for w in weights:
        blended = [sum(w[j] * preds[j][i] for j in range(len(w))) for i in range(len(act))]
        if check_nonneg and min(blended) < 0:
            out.append(math.inf)
            continue
        if len(totals):
            sums = [0.0] * len(totals)
            for v, g in zip(blended, group):
                sums[g] += v
            if min(sums) <= 0:
                out.append(math.inf)
                continue
            blended = [v * totals[g] / sums[g] for v, g in zip(blended, group)]
        out.append(math.fsum(0.0 if b == a else abs(b - a) ** p * a ** q
                             for b, a in zip(blended, act)))
    return np.array(out)


@pytest.fixture
def problem(rng):
    n, k = 40, 3
    act = rng.uniform(10, 1e4, n)
    preds = np.ascontiguousarray(np.stack([act * (1 + rng.normal(0, 0.2, n)) for _ in range(k)]))
    preds = np.abs(preds)
    weights = np.ascontiguousarray(simplex_lattice(k, 12, -4) / 12.0)
    group = (np.arange(n) % 3).astype(np.intp)
    totals = np.array([act[group == g].sum() for g in range(3)])
    return preds, act, weights, group, totals


def test_fallback_always_available():
    assert "python" in BACKENDS


def test_component_losses(kernels, rng):
    act = rng.uniform(1, 100, 30)
    pred = act + rng.normal(0, 5, 30)
    pred[3] = act[3]
    out = kernels.component_losses(pred, act, 1.7, -0.6)
    ref = [0.0 if p == a else abs(p - a) ** 1.7 * a ** -0.6 for p, a in zip(pred, act)]
    assert out == pytest.approx(ref, rel=1e-14)
    assert out[3] == 0.0


def test_ordered_sum_is_left_to_right(kernels):
    x = np.array([1e16, 1.0, -1e16, 1.0])
    seq = 0.0
    for v in x:
        seq += v
    assert kernels.ordered_sum(x) == seq
    assert kernels.ordered_sum(np.zeros(0)) == 0.0


@pytest.mark.parametrize("with_controls", [False, True])
@pytest.mark.parametrize("check_nonneg", [False, True])
def test_blend_losses_match_loops(kernels, problem, with_controls, check_nonneg):
    preds, act, weights, group, totals = problem
    if not with_controls:
        group, totals = np.zeros(0, np.intp), np.zeros(0)
    got = kernels.blend_losses(preds, act, weights, 2.0, -1.0, group, totals, check_nonneg)
    ref = loop_blend_losses(preds, act, weights, 2.0, -1.0, group, totals, check_nonneg)
    assert np.array_equal(np.isinf(got), np.isinf(ref))
    finite = np.isfinite(ref)
    assert got[finite] == pytest.approx(ref[finite], rel=1e-10)


@pytest.mark.skipif("cython" not in BACKENDS, reason="compiled kernels not built")
def test_backends_agree(problem):
    preds, act, weights, group, totals = problem
    c, py = _backend.load("cython"), _backend.load("python")
    a = c.blend_losses(preds, act, weights, 1.3, -0.4, group, totals, True)
    b = py.blend_losses(preds, act, weights, 1.3, -0.4, group, totals, True)
    assert np.array_equal(np.isinf(a), np.isinf(b))
    assert a[np.isfinite(a)] == pytest.approx(b[np.isfinite(b)], rel=1e-12)
    assert c.total_loss(preds[0], act, 2.0, -1.0) == pytest.approx(
        py.total_loss(preds[0], act, 2.0, -1.0), rel=1e-13)


@pytest.mark.parametrize("threads", [1, 2, 4, 7])
def test_thread_count_does_not_change_results(kernels, problem, threads):
    preds, act, weights, group, totals = problem
    one = kernels.blend_losses(preds, act, weights, 2.0, -1.0, group, totals, True, 1)
    many = kernels.blend_losses(preds, act, weights, 2.0, -1.0, group, totals, True, threads)
    assert np.array_equal(one, many)


def test_total_loss_reproducible(kernels, rng):
    act = rng.uniform(1, 1e6, 10_000)
    pred = act * rng.uniform(0.5, 1.5, 10_000)
    first = kernels.total_loss(pred, act, 2.0, -1.0)
    assert all(kernels.total_loss(pred, act, 2.0, -1.0) == first for _ in range(5))
    assert first == kernels.ordered_sum(kernels.component_losses(pred, act, 2.0, -1.0))
