"""Release acceptance suite.

Runs every criterion at its stated budget and tolerance via
biphoton.acceptance (the same code behind `biphoton verify`) and prints
one pass/fail line per criterion. Budgets make this the slowest test
module (a few minutes on two cores); run it alone with
`pytest tests/test_acceptance.py -v`.
"""

import pytest

from biphoton import acceptance
from biphoton.config import DEFAULT_SEED

SEED = DEFAULT_SEED


def _report(result):
    print(result.line())
    assert result.passed, result.line()


def test_criterion_01_narrow_mask_map():
    _report(acceptance.criterion_1(SEED))


def test_criterion_02_finite_mask_contrast():
    _report(acceptance.criterion_2(SEED))


@pytest.fixture(scope="module")
def sweep_results():
    return acceptance.criterion_3_and_4(SEED)


def test_criterion_03_fringe_count_law(sweep_results):
    _report(sweep_results[0])


def test_criterion_04_slope_sign_law(sweep_results):
    _report(sweep_results[1])


def test_criterion_05_patterned_levels():
    _report(acceptance.criterion_5(SEED))


def test_criterion_06_singles_invisibility():
    _report(acceptance.criterion_6(SEED))


def test_criterion_07_sampler_oracle_equivalence():
    _report(acceptance.criterion_7(SEED))


def test_criterion_08_exact_identities():
    _report(acceptance.criterion_8(SEED))


def test_criterion_09_visibility_linearity():
    _report(acceptance.criterion_9(SEED))


def test_criterion_10_determinism():
    _report(acceptance.criterion_10(SEED))
