"""Shared independent oracles for the test suite."""

from functools import lru_cache

import numpy as np


def levenshtein_oracle(a, b):
    """Naive top-down recursion (memoized), independent of the DP version."""

    @lru_cache(maxsize=None)
    def d(i, j):
        if i == 0:
            return j
        if j == 0:
            return i
        return min(
            d(i - 1, j) + 1,
            d(i, j - 1) + 1,
            d(i - 1, j - 1) + (a[i - 1] != b[j - 1]),
        )

    return d(len(a), len(b))


def finite_difference(build_loss, param, idx, step=1e-5):
    """Central finite difference of a scalar loss wrt one parameter element."""
    orig = param.values.flat[idx]
    param.values.flat[idx] = orig + step
    lp = float(build_loss().values)
    param.values.flat[idx] = orig - step
    lm = float(build_loss().values)
    param.values.flat[idx] = orig
    return (lp - lm) / (2.0 * step)


def max_grad_rel_error(build_loss, params, step=1e-5, floor=1e-5, stride=1):
    """Max relative error between analytic grads and central differences.

    The denominator floor absorbs finite-difference roundoff on gradients
    that are themselves at noise level.
    """
    for p in params.values():
        p.clear_grad()
    from derivgen import numeric as nm

    nm.backward(build_loss())
    worst = 0.0
    for p in params.values():
        for idx in range(0, p.values.size, stride):
            num = finite_difference(build_loss, p, idx, step)
            ana = p.grad.flat[idx]
            rel = abs(ana - num) / max(floor, abs(ana) + abs(num))
            worst = max(worst, rel)
    for p in params.values():
        p.clear_grad()
    return worst


def all_strings(alphabet, max_len):
    """Every string over ``alphabet`` with length 0..max_len."""
    out = [""]
    frontier = [""]
    for _ in range(max_len):
        frontier = [s + c for s in frontier for c in alphabet]
        out.extend(frontier)
    return out


# Acceptance-criterion verdicts, printed in the terminal summary so they
# survive pytest's output capture (see test_acceptance.report).
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.write_line("")
        terminalreporter.write_line("acceptance criteria:")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
