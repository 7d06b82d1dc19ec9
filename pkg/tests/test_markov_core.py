"""Weighted chains, detailed balance, and the spectral operations."""

import numpy as np
import pytest

import sgaplab as sg
from sgaplab.errors import DisconnectedChainError, NotReversibleError
from sgaplab.markov_core import (
    _power_max_abs,
    _power_second_largest,
    chain_from_json,
    chain_to_json,
    dirichlet_form,
    m_inner,
)

from conftest import (
    complete_graph_chain,
    cycle_chain,
    random_reversible_chain,
    two_state_swap,
)


# ---------------------------------------------------------------------------
# construction and diagnostics
# ---------------------------------------------------------------------------

def test_construction_validates_rows_and_measure():
    with pytest.raises(ValueError):
        sg.WeightedChain(["a"], [0.0], [(0, 0, 1.0)])
    with pytest.raises(ValueError):
        sg.WeightedChain(["a", "b"], [1, 1], [(0, 1, 0.7), (1, 0, 1.0)])
    sub = sg.WeightedChain(["a", "b"], [1, 1], [(0, 1, 0.7), (1, 0, 1.0)], row_mode="substochastic")
    assert sub.row_mode == "substochastic"
    with pytest.raises(ValueError):
        sg.WeightedChain(["a", "b"], [1, 1], [(0, 1, 1.2), (1, 0, 1.0)], row_mode="substochastic")


def test_detailed_balance_values():
    halfline = sg.build_pgl2_halfline(sg.HalfLineSpec(q=2, length=10, mode="lumped"))
    assert sg.check_detailed_balance(halfline) < 1e-14
    graph_walk = cycle_chain(6)
    assert sg.check_detailed_balance(graph_walk) == 0.0
    lopsided = sg.WeightedChain(
        ["0", "1"], [0.5, 0.5], [(0, 1, 1.0), (1, 0, 0.5), (1, 1, 0.5)]
    )
    assert sg.check_detailed_balance(lopsided) == pytest.approx(0.25, abs=0)
    with pytest.raises(NotReversibleError):
        sg.lambda1(lopsided)


def test_apply_markov_basics():
    chain = cycle_chain(5)
    ones = np.ones(5)
    assert np.max(np.abs(sg.apply_markov(chain, ones) - 1.0)) <= 1e-12
    swap = two_state_swap()
    assert np.allclose(sg.apply_markov(swap, [1.0, -1.0]), [-1.0, 1.0])
    with pytest.raises(ValueError):
        sg.apply_markov(swap, [1.0, 2.0, 3.0])


def test_apply_markov_alternating_on_halfline():
    for q, n in ((2, 7), (3, 12), (4, 9)):
        chain = sg.build_pgl2_halfline(sg.HalfLineSpec(q=q, length=n, mode="lumped"))
        f = np.array([(-1.0) ** i for i in range(chain.n)])
        assert np.max(np.abs(sg.apply_markov(chain, f) + f)) < 1e-12


# ---------------------------------------------------------------------------
# spectra
# ---------------------------------------------------------------------------

def test_lambda1_complete_graph():
    report = sg.lambda1(complete_graph_chain(3))
    assert report.estimate == pytest.approx(1.5, abs=1e-12)
    assert report.method == "dense"
    assert report.certified_lower <= report.estimate + report.residual


def test_lambda1_cycles_match_circulant_formula():
    for n in (3, 4, 5, 8, 12):
        lam = sg.lambda1(cycle_chain(n)).estimate
        assert lam == pytest.approx(1.0 - np.cos(2 * np.pi / n), abs=1e-10)


def test_lambda1_two_state_swap():
    assert sg.lambda1(two_state_swap()).estimate == pytest.approx(2.0, abs=1e-12)


def test_operator_norm_values():
    assert sg.operator_norm_l20(two_state_swap()).estimate == pytest.approx(1.0, abs=1e-12)
    assert sg.operator_norm_l20(complete_graph_chain(3)).estimate == pytest.approx(0.5, abs=1e-12)
    for q, n in ((2, 9), (3, 6)):
        chain = sg.build_pgl2_halfline(sg.HalfLineSpec(q=q, length=n, mode="lumped"))
        assert sg.operator_norm_l20(chain).estimate == pytest.approx(1.0, abs=1e-10)


def test_spectral_ops_reject_substochastic_rows():
    chain = sg.build_pgl2_halfline(sg.HalfLineSpec(q=2, length=6, mode="compression"))
    with pytest.raises(ValueError):
        sg.lambda1(chain)
    with pytest.raises(ValueError):
        sg.operator_norm_l20(chain)


def test_disconnected_chain_error_names_pair():
    chain = sg.WeightedChain(
        ["left", "right"], [1.0, 1.0], [(0, 0, 1.0), (1, 1, 1.0)]
    )
    with pytest.raises(DisconnectedChainError) as err:
        sg.lambda1(chain)
    assert "left" in str(err.value) and "right" in str(err.value)


def test_dense_and_iterative_paths_agree(rng):
    for _ in range(12):
        chain = random_reversible_chain(rng, n_states=int(rng.integers(8, 65)))
        theta, _funcs = sg.chain_spectrum(chain)
        unit = np.sqrt(chain.measure / chain.measure.sum())
        s = chain.symmetrized
        got_theta, _v, _its, _res = _power_second_largest(s, unit)
        assert got_theta == pytest.approx(float(theta[1]), abs=1e-8)
        got_abs, _v, _its, _res = _power_max_abs(s, unit)
        want = max(abs(float(theta[1])), abs(float(theta[-1])))
        assert got_abs == pytest.approx(want, abs=1e-8)


def test_rayleigh_identity_dirichlet_form(rng):
    for _ in range(10):
        chain = random_reversible_chain(rng)
        f = rng.normal(size=chain.n)
        direct = m_inner(chain, f - sg.apply_markov(chain, f), f)
        assert dirichlet_form(chain, f) == pytest.approx(direct, abs=1e-12)


def test_substochastic_singular_values_below_one():
    for q, n in ((2, 10), (3, 8)):
        chain = sg.build_pgl2_halfline(sg.HalfLineSpec(q=q, length=n, mode="compression"))
        svals = np.linalg.svd(chain.symmetrized.toarray(), compute_uv=False)
        assert svals.max() <= 1.0 + 1e-12


def test_constant_eigenvector_and_m_orthogonality(rng):
    for _ in range(5):
        chain = random_reversible_chain(rng)
        ones = np.ones(chain.n)
        assert np.max(np.abs(sg.apply_markov(chain, ones) - ones)) <= 1e-12
        theta, funcs = sg.chain_spectrum(chain)
        assert theta[0] == pytest.approx(1.0, abs=1e-10)
        for i in range(1, chain.n):
            assert abs(m_inner(chain, funcs[:, i], ones)) <= 1e-10


def test_spectral_report_validation():
    with pytest.raises(ValueError):
        sg.SpectralReport(estimate=1.0, certified_lower=2.0, iterations=1, residual=0.0, method="dense")
    with pytest.raises(ValueError):
        sg.SpectralReport(estimate=1.0, certified_lower=0.5, iterations=1, residual=-1.0, method="dense")
    rep = sg.SpectralReport(estimate=1.0, certified_lower=0.9, iterations=3, residual=0.01, method="lanczos")
    assert rep.to_json_dict()["method"] == "lanczos"


def test_chain_json_round_trip(rng):
    chain = random_reversible_chain(rng)
    again = chain_from_json(chain_to_json(chain))
    assert again.states == chain.states
    assert np.allclose(again.measure, chain.measure)
    assert sg.lambda1(again).estimate == pytest.approx(sg.lambda1(chain).estimate, abs=0)
