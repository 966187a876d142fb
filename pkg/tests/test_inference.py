"""Exact inference: elimination engine vs enumeration oracle, conditionals,
and the Markov-blanket fast path."""

import numpy as np
import pytest

from querybn import StatQuery, ZeroEvidence
from querybn.experiments import ex41_bp, ex41_bsq
from querybn.inference import (EnumerationCapExceeded, answer, cond_prob,
                               enumerate_marginal, is_markov_blanket_query,
                               marginal, mb_posterior, mb_query)
from querybn.random_nets import random_blanket_query, random_net, random_query

from helpers import chain_net, enumerate_completions, make_net, naive_bayes_net


class TestMarginal:
    def test_full_assignment_equals_joint(self):
        net = chain_net(p_a=0.3, p_x_a=(0.2, 0.9), p_c_x=(0.4, 0.8))
        for a in enumerate_completions(net, {}):
            assert marginal(net, a) == pytest.approx(net.joint_prob(a), abs=1e-12)

    def test_empty_assignment_is_total_mass(self):
        assert marginal(chain_net(), {}) == pytest.approx(1.0, abs=1e-12)

    def test_matches_enumeration_on_random_nets(self):
        rng = np.random.default_rng(20)
        for _ in range(50):
            net = random_net(rng, n_vars=int(rng.integers(2, 13)), arities=(2,), max_parents=3)
            names = list(net.names)
            k = int(rng.integers(0, len(names) + 1))
            picks = rng.choice(len(names), size=k, replace=False)
            a = {names[i]: str(rng.integers(0, 2)) for i in picks}
            assert marginal(net, a) == pytest.approx(enumerate_marginal(net, a), abs=1e-12)


class TestEnumerationOracle:
    def test_single_node_prior(self):
        net = make_net([("V", "01")], [], {"V": [[0.3, 0.7]]})
        assert enumerate_marginal(net, {"V": "0"}) == pytest.approx(0.3, abs=1e-15)

    def test_two_node_chain_total_probability(self):
        net = make_net([("A", "01"), ("B", "01")], [("A", "B")],
                       {"A": [[0.3, 0.7]], "B": [[0.2, 0.8], [0.6, 0.4]]})
        expected = 0.3 * 0.8 + 0.7 * 0.4  # law of total probability, by hand
        assert enumerate_marginal(net, {"B": "1"}) == pytest.approx(expected, abs=1e-15)

    def test_cap_exceeded(self):
        rng = np.random.default_rng(0)
        net = random_net(rng, n_vars=6, arities=(2,))
        with pytest.raises(EnumerationCapExceeded):
            enumerate_marginal(net, {}, cap=5)


class TestCondProb:
    def test_ex41_bsq_answers_the_query_perfectly(self):
        assert cond_prob(ex41_bsq(), {"C": "1"}, {"A": "1"}) == pytest.approx(1.0, abs=1e-12)

    def test_ex41_bp_gives_half(self):
        # At uniform parameters X carries no information; enumeration agrees.
        bp = ex41_bp()
        by_enum = (enumerate_marginal(bp, {"C": "1", "A": "1"})
                   / enumerate_marginal(bp, {"A": "1"}))
        assert by_enum == pytest.approx(0.5, abs=1e-12)
        assert cond_prob(bp, {"C": "1"}, {"A": "1"}) == pytest.approx(0.5, abs=1e-12)

    def test_self_conditioning_is_one(self):
        net = chain_net(p_a=0.3)
        assert cond_prob(net, {"A": "1"}, {"A": "1"}) == pytest.approx(1.0, abs=1e-15)

    def test_conflicting_overlap_is_impossible_event(self):
        assert cond_prob(chain_net(), {"A": "1"}, {"A": "0"}) == 0.0

    def test_product_identity(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            net = random_net(rng, n_vars=6)
            q = random_query(rng, net, max_target=2, max_evidence=2)
            lhs = cond_prob(net, q.target, q.evidence) * marginal(net, q.evidence)
            rhs = marginal(net, {**q.target, **q.evidence})
            assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_zero_evidence_raises(self):
        net = make_net([("A", "01"), ("B", "01")], [("A", "B")],
                       {"A": [[1.0, 0.0]], "B": [[0.5, 0.5], [0.5, 0.5]]})
        with pytest.raises(ZeroEvidence):
            cond_prob(net, {"B": "1"}, {"A": "1"})



class TestMbQuery:
    def test_childless_node_returns_cpt_entry(self):
        net = chain_net(p_a=0.3, p_x_a=(0.2, 0.9), p_c_x=(0.4, 0.8))
        # C has no children; evidence = its parent X
        assert mb_query(net, "C", "1", {"X": "1"}) == pytest.approx(0.8, abs=1e-15)

    def test_naive_bayes_posterior_matches_global_inference(self):
        net = naive_bayes_net(n=6, p_c=0.35, p_a_c0=0.15, p_a_c1=0.6)
        y = {f"A{i}": str(i % 2) for i in range(1, 7)}
        assert mb_query(net, "C", "1", y) == pytest.approx(
            cond_prob(net, {"C": "1"}, y), abs=1e-12)

    def test_equals_cond_prob_on_random_blanket_queries(self):
        rng = np.random.default_rng(22)
        for _ in range(40):
            net = random_net(rng, n_vars=int(rng.integers(3, 8)), arities=(2, 3))
            q = random_blanket_query(rng, net)
            (v, val), = q.target.items()
            assert mb_query(net, v, val, q.evidence) == pytest.approx(
                cond_prob(net, q.target, q.evidence), abs=1e-12)

    def test_posterior_normalizes(self):
        rng = np.random.default_rng(23)
        net = random_net(rng, n_vars=5, arities=(2, 3))
        q = random_blanket_query(rng, net)
        (v, _), = q.target.items()
        assert mb_posterior(net, v, q.evidence).sum() == pytest.approx(1.0, abs=1e-9)

    def test_missing_blanket_member_rejected(self):
        net = chain_net()
        with pytest.raises(ValueError, match="Markov blanket"):
            mb_query(net, "X", "1", {"A": "1"})  # child C missing

    def test_all_scores_zero_is_zero_evidence(self):
        net = make_net([("A", "01"), ("B", "01")], [("A", "B")],
                       {"A": [[0.5, 0.5]], "B": [[1.0, 0.0], [1.0, 0.0]]})
        with pytest.raises(ZeroEvidence):
            mb_query(net, "A", "1", {"B": "1"})


class TestAnswerDispatch:
    def test_blanket_query_takes_fast_path_with_equal_value(self):
        net = naive_bayes_net(n=4)
        q = StatQuery({"C": "0"}, {f"A{i}": "0" for i in range(1, 5)})
        assert is_markov_blanket_query(net, q)
        assert answer(net, q) == pytest.approx(cond_prob(net, q.target, q.evidence), abs=1e-12)

    def test_non_blanket_query_uses_general_path(self):
        net = chain_net(p_a=0.3, p_x_a=(0.2, 0.9), p_c_x=(0.4, 0.8))
        q = StatQuery({"C": "1"}, {"A": "1"})
        assert not is_markov_blanket_query(net, q)
        assert answer(net, q) == pytest.approx(cond_prob(net, q.target, q.evidence), abs=1e-15)

    def test_empty_evidence_is_the_prior(self):
        net = chain_net(p_a=0.3)
        q = StatQuery({"A": "1"})
        assert answer(net, q) == pytest.approx(marginal(net, {"A": "1"}), abs=1e-15)

    def test_target_values_sum_to_one_over_domain(self):
        rng = np.random.default_rng(24)
        for _ in range(10):
            net = random_net(rng, n_vars=5, arities=(2, 3))
            q = random_blanket_query(rng, net)
            (v, _), = q.target.items()
            total = sum(answer(net, StatQuery({v: val}, q.evidence)) for val in net.domain(v))
            assert total == pytest.approx(1.0, abs=1e-9)
