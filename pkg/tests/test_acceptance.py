"""Acceptance gate: the twelve certification criteria at their stated tolerances.

Each test executes one criterion, prints its single pass/fail report line,
and asserts the criterion passed.
"""

import pytest

from tikflow import suite


def _run(fn):
    line = fn()
    print(line.text())
    assert line.passed, line.text()
    return line


def test_criterion_01_residual_rate():
    _run(suite.criterion_1)


def test_criterion_02_exponential_stability():
    _run(suite.criterion_2)


def test_criterion_03_invariance():
    _run(suite.criterion_3)


def test_criterion_04_strong_selection():
    _run(suite.criterion_4)


def test_criterion_05_path_limit():
    _run(suite.criterion_5)


def test_criterion_06_resolvent_identity():
    _run(suite.criterion_6)


def test_criterion_07_firm_and_triple():
    _run(suite.criterion_7)


def test_criterion_08_path_lipschitz():
    _run(suite.criterion_8)


def test_criterion_09_composite_inequality():
    _run(suite.criterion_9)


def test_criterion_10_end_to_end():
    _run(suite.criterion_10)


def test_criterion_11_monitor():
    _run(suite.criterion_11)


def test_criterion_12_divergence():
    _run(suite.criterion_12)
