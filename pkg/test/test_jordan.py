from dataclasses import replace

import numpy as np
import pytest

from darboux.intertwiner import StrippingFlag
from jordan.basis import CanonicalBasis, NormRow, NormTable, duality_check, norm_table
from jordan.index import index_report
from jordan.suites import corollary3_check, corollary8_check, kernel_duality_suite, lemma3_check
from solutions.formal import proportionality
from utils.errors import StructureError


def test_second_order_norm_tables(second_order):
    minus = norm_table(second_order.q.basis)
    plus = norm_table(second_order.dual)
    assert [(r.k, r.k_plus_up, r.k_plus_down) for r in minus.rows] == [(2, 0, 0)]
    assert [(r.k, r.k_plus_up, r.k_plus_down) for r in plus.rows] == [(2, 2, 2)]


def test_one_sided_norm_tables(one_sided):
    minus = norm_table(one_sided.kernel.q.basis)
    plus = norm_table(one_sided.kernel.dual)
    assert [(r.k_plus_up, r.k_plus_down) for r in minus.rows] == [(1, 0)]
    assert [(r.k_plus_up, r.k_plus_down) for r in plus.rows] == [(0, 1)]


def test_empty_basis_has_an_empty_table(oscillator):
    table = norm_table(CanonicalBasis(entries=(), side="minus", profile=oscillator))
    assert table.rows == []


def test_mismatched_tables_are_refused():
    row = NormRow(lam=-1 + 0j, k=2, k_plus_up=0, k_plus_down=0, plus=["no", "yes"], minus=["no", "no"])
    other = NormRow(lam=-1 + 0j, k=3, k_plus_up=0, k_plus_down=0, plus=["no"] * 3, minus=["no"] * 3)
    with pytest.raises(StructureError):
        duality_check(NormTable("minus", [row]), NormTable("plus", [other]))


@pytest.mark.parametrize("fixture", ["second_order", "one_sided"])
def test_kernels_are_dual(request, fixture):
    value = request.getfixturevalue(fixture)
    kernel = value if fixture == "second_order" else value.kernel
    report = kernel_duality_suite(kernel.q, kernel.dual)
    assert report.ran
    assert all(p.xor_up and p.xor_down for p in report.duality.pairs)
    assert report.passed


def test_duality_is_skipped_without_the_stripping_flag(one_sided):
    report = kernel_duality_suite(replace(one_sided.kernel.q, stripping=StrippingFlag()))
    assert not report.ran and report.passed is None


def test_order_one_dual_is_the_reciprocal(one_sided):
    kernel = one_sided.kernel
    lo, hi = max(kernel.q.segments, key=lambda s: s[1] - s[0])
    x = np.linspace(lo + 0.1 * (hi - lo), hi - 0.1 * (hi - lo), 101)
    phi = next(kernel.q.basis.members())
    psi = next(kernel.dual.members())
    _, deviation = proportionality(np.asarray(psi(x)[0]), 1.0 / np.asarray(phi(x)[0]))
    assert deviation <= 1e-6


def test_index_balance_at_a_free_value(second_order):
    report = index_report(-5, second_order.q.basis, second_order.dual, 0, 0)
    assert report.integers == (0, 0, 0, 0, 0, 0)
    assert report.passed


def test_index_balance_of_the_second_order_kernel(second_order):
    report = index_report(second_order.lam, second_order.q.basis, second_order.dual,
                          second_order.nu_plus, second_order.nu_minus)
    assert (report.n_plus, report.n_minus, report.n_zero) == (0, 2, 0)
    assert report.balance_holds and report.passed


def test_index_balance_with_a_one_sided_member(one_sided):
    kernel = one_sided.kernel
    report = index_report(kernel.lam, kernel.q.basis, kernel.dual, kernel.nu_plus, kernel.nu_minus)
    assert report.n_zero == report.n_zero_dual == 1
    assert report.degenerate_zero
    assert report.passed


def test_broken_balance_is_reported(second_order):
    report = index_report(second_order.lam, second_order.q.basis, second_order.dual, 1, 2)
    assert not report.balance_holds
    assert not report.passed


def test_index_report_wants_the_sides_in_order(second_order):
    with pytest.raises(ValueError):
        index_report(-1, second_order.dual, second_order.q.basis, 0, 0)


def test_index_csv_columns(second_order, tmp_path):
    report = index_report(-5, second_order.q.basis, second_order.dual, 0, 0)
    text = report.to_csv(tmp_path / "index.csv").read_text()
    assert text.splitlines()[0] == "nu_plus,nu_minus,n_plus,n_minus,n_zero,n_zero_dual"


def test_decaying_subspace_is_one_dimensional(oscillator, ctx_minus_one):
    report = corollary3_check(oscillator, ctx_minus_one)
    assert report.seeds[0] != report.seeds[1]
    assert report.deviation <= 1e-6
    assert report.passed


def test_half_line_chain_has_no_whole_axis_member(one_sided):
    report = corollary8_check(one_sided.chain)
    assert report.whole_axis == [False, False, False]
    assert report.passed


def test_verdict_stability_needs_the_flag(oscillator, ctx_i):
    report = lemma3_check(oscillator, ctx_i, StrippingFlag())
    assert not report.ran
    assert report.passed is None


@pytest.mark.slow
def test_verdicts_are_seed_independent(oscillator, ctx_i):
    report = lemma3_check(oscillator, ctx_i, StrippingFlag(cannot_be_stripped=True), n_max=1)
    assert report.ran
    assert report.verdicts == report.other_verdicts
    assert report.passed


def test_second_order_basis_forms_a_chain(second_order):
    assert max(second_order.q.basis.chain_residuals()) <= 1e-6
    assert second_order.q.basis.check_chains()
