import dataclasses
import itertools
import json

import numpy as np
import pytest

from cascadelab.corpus import UserProfile, cascade_to_record, validate_cascade
from cascadelab.sim import (
    CeeConfig,
    CeeState,
    GenConfig,
    ScenarioConfig,
    attribute_similarity,
    effective_rate,
    run_ensemble,
    run_meanfield,
    sequential_generate,
)
from cascadelab.topo import max_out_degree


def cascade_bytes(cascade) -> bytes:
    return json.dumps(cascade_to_record(cascade)).encode()


class TestEffectiveRate:
    def test_off_is_identity(self):
        assert effective_rate(0.5, CeeState(CeeConfig(mode="off")), "u") == 0.5

    def test_entropy_halves_after_one_spread(self):
        state = CeeState(CeeConfig(mode="entropy", delta_s=1.0))
        state.record_success("u")
        assert effective_rate(0.6, state, "u") == pytest.approx(0.3)

    def test_geometric_squares_beta(self):
        state = CeeState(CeeConfig(mode="geometric", beta=0.5))
        state.record_success("u")
        state.record_success("u")
        assert effective_rate(0.8, state, "u") == pytest.approx(0.2)

    def test_never_increases_and_monotone_in_k(self):
        for mode, kwargs in (("entropy", {"delta_s": 0.7}),
                             ("geometric", {"beta": 0.85})):
            state = CeeState(CeeConfig(mode=mode, **kwargs))
            previous = 1.0
            for _ in range(10):
                rate = effective_rate(1.0, state, "u")
                assert rate <= previous + 1e-15
                assert rate <= 1.0
                previous = rate
                state.record_success("u")

    def test_credibility_definition(self):
        state = CeeState(CeeConfig(mode="entropy", delta_s=2.0))
        state.record_success("u")
        state.record_success("u")
        assert state.entropy("u") == pytest.approx(4.0)
        assert state.credibility("u") == pytest.approx(1.0 / 5.0)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            CeeConfig(mode="sometimes")
        with pytest.raises(ValueError):
            CeeConfig(mode="geometric", beta=0.0)
        with pytest.raises(ValueError):
            CeeConfig(mode="entropy", delta_s=0.0)


def scenario(**overrides) -> ScenarioConfig:
    base = dict(kind="homogeneous", n_users=50, seed=1, base_rate=0.5)
    base.update(overrides)
    return ScenarioConfig(**base)


class TestMeanField:
    def test_rate_zero_gives_singleton(self):
        cascade = run_meanfield(scenario(base_rate=0.0, seed=7))
        assert cascade.size == 1

    def test_rate_one_full_fanout_gives_star(self):
        cascade = run_meanfield(scenario(base_rate=1.0, n_users=20, fanout=19, seed=3))
        assert cascade.size == 20
        assert max_out_degree(cascade) == 19
        assert all(node.t == 1.0 for node in cascade.nodes if not node.is_root)

    def test_deterministic_under_seed(self):
        a = run_meanfield(scenario(kind="heterogeneous", seed=99))
        b = run_meanfield(scenario(kind="heterogeneous", seed=99))
        assert cascade_bytes(a) == cascade_bytes(b)

    def test_outputs_validate_across_scenarios(self):
        for kind, seed in itertools.product(
                ("homogeneous", "heterogeneous", "barabasi_albert"), range(10)):
            cascade = run_meanfield(scenario(kind=kind, seed=seed))
            validate_cascade(cascade)

    def test_beta_one_matches_cee_off_exactly(self):
        for seed in range(20):
            off = run_meanfield(scenario(kind="heterogeneous", seed=seed))
            beta1 = run_meanfield(scenario(
                kind="heterogeneous", seed=seed,
                cee=CeeConfig(mode="geometric", beta=1.0)))
            assert cascade_bytes(off) == cascade_bytes(beta1)

    def test_tiny_delta_s_matches_cee_off_sizes(self):
        for seed in range(100):
            off = run_meanfield(scenario(kind="heterogeneous", seed=seed))
            eps = run_meanfield(scenario(
                kind="heterogeneous", seed=seed,
                cee=CeeConfig(mode="entropy", delta_s=1e-9)))
            assert off.size == eps.size

    def test_vanishing_beta_yields_path(self):
        for seed in range(25):
            cascade = run_meanfield(scenario(
                base_rate=1.0, seed=seed,
                cee=CeeConfig(mode="geometric", beta=1e-12)))
            assert max_out_degree(cascade) <= 1

    def test_max_size_caps_growth(self):
        cascade = run_meanfield(scenario(base_rate=1.0, n_users=100, fanout=10,
                                         max_size=17, seed=5))
        assert cascade.size == 17

    def test_times_are_round_indices(self):
        cascade = run_meanfield(scenario(kind="heterogeneous", seed=11))
        ts = sorted({node.t for node in cascade.nodes})
        assert ts[0] == 0.0
        assert all(t == int(t) for t in ts)

    def test_barabasi_albert_rates_span(self):
        # Power-law rates: most users near the floor, a few highly infectious.
        from cascadelab.sim import RATE_FLOOR, _power_law_rates
        rng = np.random.default_rng(0)
        rates = _power_law_rates(20_000, 2.5, rng)
        assert rates.min() >= RATE_FLOOR
        assert rates.max() <= 1.0
        assert np.median(rates) < 0.03
        assert np.quantile(rates, 0.999) > 0.3
        # inverse-CDF sanity: empirical survival beyond 0.3 close to closed form
        survival = ((0.3 ** -1.5 - 1.0) / (RATE_FLOOR ** -1.5 - 1.0))
        assert np.mean(rates > 0.3) == pytest.approx(survival, abs=0.003)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            scenario(kind="sparse")
        with pytest.raises(ValueError):
            scenario(base_rate=1.5)
        with pytest.raises(ValueError):
            scenario(power_law_exponent=1.0)


class TestSequentialGenerate:
    def test_single_node(self):
        cascade = sequential_generate(GenConfig(n_nodes=1, seed=0))
        assert cascade.size == 1
        assert cascade.root.uid == "u0"

    def test_degree_argmax_builds_star(self):
        config = GenConfig(n_nodes=12, seed=0, score_mode="degree",
                           alpha=1.0, selection="argmax")
        cascade = sequential_generate(config)
        assert max_out_degree(cascade) == 11
        assert all(node.parent == "u0" for node in cascade.nodes if not node.is_root)

    def test_degree_argmax_with_vanishing_beta_builds_path(self):
        config = GenConfig(n_nodes=12, seed=0, score_mode="degree", alpha=1.0,
                           selection="argmax",
                           cee=CeeConfig(mode="geometric", beta=1e-12))
        cascade = sequential_generate(config)
        assert max_out_degree(cascade) == 1
        # path: node i hangs off node i-1
        for i, node in enumerate(cascade.nodes):
            if not node.is_root:
                assert node.parent == f"u{i - 1}"

    def test_insertion_times(self):
        cascade = sequential_generate(GenConfig(n_nodes=6, seed=2))
        assert [node.t for node in cascade.nodes] == [0.0, 1.0, 2.0, 3.0, 4.0, 5.0]

    def test_deterministic_under_seed(self):
        config = GenConfig(n_nodes=40, seed=123, selection="proportional")
        assert cascade_bytes(sequential_generate(config)) == \
               cascade_bytes(sequential_generate(config))

    def test_outputs_validate(self):
        for seed in range(20):
            cascade = sequential_generate(GenConfig(n_nodes=30, seed=seed))
            validate_cascade(cascade)

    def test_preferential_attachment_frequencies(self):
        # n=4, proportional, CEE off: exact outcome probabilities by
        # enumerating the score recurrence (weights = out_degree + 1).
        exact = {}
        for p2 in range(2):
            w2 = [2, 1]
            prob2 = w2[p2] / sum(w2)
            w3 = [1, 1, 1]
            w3[0] += 1           # node 1 attached to 0
            w3[p2] += 1          # node 2's parent
            for p3 in range(3):
                exact[(p2, p3)] = prob2 * w3[p3] / sum(w3)
        assert sum(exact.values()) == pytest.approx(1.0)

        counts = {key: 0 for key in exact}
        trials = 4000
        for seed in range(trials):
            cascade = sequential_generate(GenConfig(n_nodes=4, seed=seed))
            parents = [int(node.parent[1:]) for node in cascade.nodes[1:]]
            assert parents[0] == 0
            counts[(parents[1], parents[2])] += 1
        for key, probability in exact.items():
            assert counts[key] / trials == pytest.approx(probability, abs=0.03)

    def test_attribute_mode_requires_pool(self):
        with pytest.raises(ValueError, match="profile pool"):
            GenConfig(n_nodes=5, seed=0, score_mode="attribute")

    def test_attribute_mode_runs_and_validates(self):
        pool = tuple(
            UserProfile(uid=f"p{i}", fans=i * 10, followings=i, tweets=i * 3,
                        registration_year=2010 + i, verified=i % 2 == 0)
            for i in range(8)
        )
        config = GenConfig(n_nodes=25, seed=4, score_mode="mixed", gamma=2.0,
                           profiles=pool)
        validate_cascade(sequential_generate(config))

    def test_similarity_bounds(self):
        a = np.array([0.0, 0.0, 0.0, 0.0, 0.0])
        b = np.array([1.0, 1.0, 1.0, 1.0, 1.0])
        assert attribute_similarity(a, a) == 1.0
        assert 0.0 < attribute_similarity(a, b) < 1.0


class TestEnsemble:
    def test_ids_and_count(self):
        corpus = run_ensemble(scenario(seed=5), runs=3)
        assert [c.id for c in corpus] == ["run-0", "run-1", "run-2"]

    def test_same_config_same_corpus(self):
        a = run_ensemble(scenario(kind="heterogeneous", seed=8), runs=5)
        b = run_ensemble(scenario(kind="heterogeneous", seed=8), runs=5)
        assert a == b

    def test_derived_seeds_match_single_runs(self):
        corpus = run_ensemble(scenario(seed=100), runs=4)
        for i, cascade in enumerate(corpus):
            single = run_meanfield(
                dataclasses.replace(scenario(seed=100), seed=100 + i))
            assert [n.uid for n in cascade.nodes] == [n.uid for n in single.nodes]

    def test_higher_rate_dominates(self):
        fast = run_ensemble(scenario(base_rate=0.5, n_users=100, seed=0), runs=60)
        slow = run_ensemble(scenario(base_rate=0.25, n_users=100, seed=0), runs=60)
        mean_fast = np.mean([c.size for c in fast])
        mean_slow = np.mean([c.size for c in slow])
        assert mean_fast > mean_slow

    def test_generator_configs_accepted(self):
        corpus = run_ensemble(GenConfig(n_nodes=10, seed=3), runs=3)
        assert len(corpus) == 3
        for cascade in corpus:
            assert cascade.size == 10

    def test_runs_must_be_positive(self):
        with pytest.raises(ValueError):
            run_ensemble(scenario(), runs=0)
