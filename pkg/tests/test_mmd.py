import math

import numpy as np
import pytest

from cascadelab.corpus import make_corpus
from cascadelab.mmd import (
    STATISTICS,
    cascade_histogram,
    compare_corpora,
    mmd2,
    wasserstein_1,
)

from conftest import chain, random_tree, star


class TestCascadeHistogram:
    def test_star_degree(self):
        hist = cascade_histogram(star(4), "degree")
        np.testing.assert_allclose(hist, [0.0, 4 / 5, 0.0, 0.0, 1 / 5])

    def test_chain_level_width(self):
        hist = cascade_histogram(chain(3), "level_width")
        np.testing.assert_allclose(hist, [1 / 3, 1 / 3, 1 / 3])

    def test_single_node_degree(self):
        np.testing.assert_allclose(cascade_histogram(chain(1), "degree"), [1.0])

    def test_depth_profile_is_point_mass(self):
        hist = cascade_histogram(chain(4), "depth_profile")
        np.testing.assert_allclose(hist, [0.0, 0.0, 0.0, 1.0])

    def test_histograms_sum_to_one(self):
        rng = np.random.default_rng(1)
        for i in range(20):
            cascade = random_tree(int(rng.integers(1, 50)), rng, cid=f"t{i}")
            for statistic in STATISTICS:
                assert cascade_histogram(cascade, statistic).sum() == pytest.approx(1.0)

    def test_unknown_statistic(self):
        with pytest.raises(ValueError, match="unknown statistic"):
            cascade_histogram(chain(3), "entropy")


class TestWasserstein:
    def test_point_masses(self):
        assert wasserstein_1(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 1.0
        assert wasserstein_1(np.array([1.0]), np.array([0.0, 0.0, 1.0])) == 2.0

    def test_metric_axioms_on_random_triples(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            size = int(rng.integers(2, 10))
            h = rng.random(size); h /= h.sum()
            g = rng.random(size); g /= g.sum()
            f = rng.random(size); f /= f.sum()
            assert wasserstein_1(h, h) == pytest.approx(0.0, abs=1e-12)
            assert wasserstein_1(h, g) == pytest.approx(wasserstein_1(g, h))
            assert wasserstein_1(h, g) >= 0.0
            assert wasserstein_1(h, g) <= (wasserstein_1(h, f)
                                           + wasserstein_1(f, g) + 1e-12)


def corpus_of(cascades):
    return make_corpus(cascades)


class TestMmd2:
    def test_identical_corpora(self, two_chain_corpus):
        for statistic in STATISTICS:
            assert abs(mmd2(two_chain_corpus, two_chain_corpus, statistic)) <= 1e-12

    def test_adjacent_point_masses(self):
        # Two singleton corpora whose depth histograms sit one bin apart:
        # W1 = 1 so MMD^2 = 2 - 2*exp(-1/2).
        a = corpus_of([chain(2, cid="a")])    # depth 1
        b = corpus_of([chain(3, cid="b")])    # depth 2
        value = mmd2(a, b, "depth_profile", sigma=1.0)
        assert value == pytest.approx(2.0 - 2.0 * math.exp(-0.5), abs=1e-9)

    def test_symmetry_exact(self):
        rng = np.random.default_rng(3)
        a = corpus_of([random_tree(int(rng.integers(2, 30)), rng, cid=f"a{i}")
                       for i in range(10)])
        b = corpus_of([random_tree(int(rng.integers(2, 30)), rng, cid=f"b{i}")
                       for i in range(10)])
        for statistic in STATISTICS:
            assert mmd2(a, b, statistic) == mmd2(b, a, statistic)

    def test_replacing_one_cascade_is_positive(self):
        rng = np.random.default_rng(4)
        cascades = [random_tree(12, rng, cid=f"c{i}") for i in range(8)]
        a = corpus_of(cascades)
        replaced = cascades[:-1] + [chain(30, cid="c7")]
        b = corpus_of(replaced)
        assert mmd2(a, b, "degree") > 0.0

    def test_monotone_sensitivity_to_injection(self):
        rng = np.random.default_rng(5)
        base = [random_tree(10, rng, cid=f"c{i}") for i in range(10)]
        a = corpus_of(base)
        one_foreign = corpus_of(base[:-1] + [star(25, cid="c9")])
        two_foreign = corpus_of(base[:-2] + [star(25, cid="c8"), star(25, cid="c9")])
        d0 = mmd2(a, a, "degree")
        d1 = mmd2(a, one_foreign, "degree")
        d2 = mmd2(a, two_foreign, "degree")
        assert d0 <= 1e-12 < d1 < d2

    def test_empty_corpus_rejected(self):
        a = corpus_of([chain(3)])
        with pytest.raises(ValueError):
            mmd2(a, corpus_of([]), "degree")

    def test_sigma_must_be_positive(self):
        a = corpus_of([chain(3)])
        with pytest.raises(ValueError):
            mmd2(a, a, "degree", sigma=0.0)

    def test_matches_naive_double_loop(self):
        rng = np.random.default_rng(6)
        a = corpus_of([random_tree(int(rng.integers(2, 15)), rng, cid=f"a{i}")
                       for i in range(6)])
        b = corpus_of([random_tree(int(rng.integers(2, 15)), rng, cid=f"b{i}")
                       for i in range(5)])
        sigma = 0.7
        for statistic in STATISTICS:
            ha = [cascade_histogram(c, statistic) for c in a]
            hb = [cascade_histogram(c, statistic) for c in b]

            def kernel_mean(xs, ys):
                total = 0.0
                for h in xs:
                    for g in ys:
                        w = wasserstein_1(h, g)
                        total += math.exp(-w * w / (2 * sigma * sigma))
                return total / (len(xs) * len(ys))

            naive = (kernel_mean(ha, ha) + kernel_mean(hb, hb)
                     - 2 * kernel_mean(ha, hb))
            assert mmd2(a, b, statistic, sigma) == pytest.approx(naive, abs=1e-12)


class TestCompareCorpora:
    def test_self_comparison_aggregates_to_zero(self, two_chain_corpus):
        report = compare_corpora(two_chain_corpus, two_chain_corpus)
        assert abs(report.aggregate) <= 1e-12
        assert report.n_a == report.n_b == 2
        assert [row[0] for row in report.per_statistic] == list(STATISTICS)

    def test_aggregate_is_mean(self):
        rng = np.random.default_rng(7)
        a = corpus_of([random_tree(10, rng, cid=f"a{i}") for i in range(5)])
        b = corpus_of([random_tree(10, rng, cid=f"b{i}") for i in range(5)])
        report = compare_corpora(a, b, sigma=2.0)
        values = [value for _, value, _ in report.per_statistic]
        assert report.aggregate == pytest.approx(sum(values) / len(values))
        assert all(sigma == 2.0 for _, _, sigma in report.per_statistic)
