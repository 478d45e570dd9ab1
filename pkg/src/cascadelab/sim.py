"""Seeded stochastic cascade generation.

Two generators are provided. ``run_meanfield`` grows a propagation tree
over a population with no prior edges: any spreader may contact any
not-yet-infected user, so structure emerges purely from the process.
``sequential_generate`` grows a tree one node at a time by scoring every
existing node as the attachment target.

Both support credibility erosion: a node that has already spread the
message k times has its effective infection rate reduced, either as
rate/(1 + k*delta_s) (entropy accumulates per successful spread and
credibility is its reciprocal) or as rate * beta**k (geometric decay).

Every run owns a single numpy Generator seeded from its config, so
identical configs produce byte-identical cascades, and ensembles derive
per-run seeds so parallel and serial execution agree.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .corpus import Cascade, CascadeNode, Corpus, Label, UserProfile, make_corpus

CEE_MODES = ("off", "entropy", "geometric")
SCENARIOS = ("homogeneous", "heterogeneous", "barabasi_albert")
SCORE_MODES = ("degree", "attribute", "mixed")
SELECTIONS = ("argmax", "proportional")

# Lower cutoff for power-law infection rates; a pure r**-a density on (0, 1]
# is not normalizable for a > 1, so rates live on [RATE_FLOOR, 1].
RATE_FLOOR = 0.01


@dataclass(frozen=True)
class CeeConfig:
    mode: str = "off"
    delta_s: float = 1.0     # entropy added per successful spread
    beta: float = 0.9        # geometric decay factor per successful spread

    def __post_init__(self):
        if self.mode not in CEE_MODES:
            raise ValueError(f"cee mode must be one of {CEE_MODES}")
        if self.mode == "entropy" and self.delta_s <= 0.0:
            raise ValueError("delta_s must be > 0")
        if self.mode == "geometric" and not 0.0 < self.beta <= 1.0:
            raise ValueError("beta must be in (0, 1]")


class CeeState:
    """Per-node spread counts driving credibility erosion during one run.

    ``k(node)`` is the node's number of successful spreads so far, which
    equals its current out-degree in the growing cascade. Entropy is
    S = k * delta_s and credibility C = 1/(1 + S).
    """

    def __init__(self, config: CeeConfig):
        self.config = config
        self._k: dict[object, int] = {}

    def k(self, node) -> int:
        return self._k.get(node, 0)

    def entropy(self, node) -> float:
        return self.k(node) * self.config.delta_s

    def credibility(self, node) -> float:
        return 1.0 / (1.0 + self.entropy(node))

    def record_success(self, node) -> None:
        self._k[node] = self._k.get(node, 0) + 1


def effective_rate(base: float, cee: CeeState, node) -> float:
    """Infection rate after credibility erosion for this spreader."""
    mode = cee.config.mode
    if mode == "off":
        return base
    if mode == "entropy":
        return base * cee.credibility(node)
    return base * cee.config.beta ** cee.k(node)


# ---------------------------------------------------------------------------
# Mean-field scenarios
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScenarioConfig:
    kind: str
    n_users: int
    seed: int
    base_rate: float = 0.5              # homogeneous only
    power_law_exponent: float = 2.5     # barabasi_albert only
    fanout: int = 3                     # contacts per active node per round
    active_rounds: int = 3              # rounds a node stays active
    cee: CeeConfig = CeeConfig()
    max_size: Optional[int] = None      # defaults to n_users

    def __post_init__(self):
        if self.kind not in SCENARIOS:
            raise ValueError(f"scenario must be one of {SCENARIOS}")
        if self.n_users < 1:
            raise ValueError("n_users must be >= 1")
        if not 0.0 <= self.base_rate <= 1.0:
            raise ValueError("base_rate must be in [0, 1]")
        if self.power_law_exponent <= 1.0:
            raise ValueError("power_law_exponent must be > 1")
        if self.fanout < 1 or self.active_rounds < 1:
            raise ValueError("fanout and active_rounds must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")
        if self.max_size is not None and self.max_size < 1:
            raise ValueError("max_size must be >= 1")


def _power_law_rates(n: int, exponent: float, rng: np.random.Generator) -> np.ndarray:
    """Rates with density proportional to r**-exponent on [RATE_FLOOR, 1].

    Inverse-CDF sampling: r = ((1-u)*floor^(1-a) + u)^(1/(1-a)). Most users
    get a near-floor rate; a few are highly infectious.
    """
    u = rng.random(n)
    p = 1.0 - exponent
    floor_term = RATE_FLOOR ** p
    rates = ((1.0 - u) * floor_term + u) ** (1.0 / p)
    return np.clip(rates, RATE_FLOOR, 1.0)


def _user_rates(config: ScenarioConfig, rng: np.random.Generator) -> np.ndarray:
    if config.kind == "homogeneous":
        return np.full(config.n_users, config.base_rate)
    if config.kind == "heterogeneous":
        return rng.random(config.n_users)
    return _power_law_rates(config.n_users, config.power_law_exponent, rng)


def run_meanfield(config: ScenarioConfig, cascade_id: Optional[str] = None) -> Cascade:
    """Grow one propagation tree by synchronous contact rounds.

    Round 0 seeds a uniformly chosen source at t=0. Each later round,
    every active node (in infection order) contacts up to ``fanout``
    distinct not-yet-infected users sampled uniformly; each contact
    succeeds with the spreader's effective rate, and a success joins the
    tree with the spreader as parent and t = round index. Nodes stay
    active for ``active_rounds`` rounds after infection. The run stops
    when no node is active, no susceptible remains, or ``max_size`` is
    reached.
    """
    rng = np.random.default_rng(config.seed)
    n = config.n_users
    max_size = config.max_size if config.max_size is not None else n
    rates = _user_rates(config, rng)
    cee = CeeState(config.cee)

    source = int(rng.integers(n))
    infected_order = [source]
    infected_round = {source: 0}
    parent: dict[int, int] = {}
    susceptible = [u for u in range(n) if u != source]
    sus_pos = {u: i for i, u in enumerate(susceptible)}

    def remove_susceptible(user: int) -> None:
        # O(1) swap-with-last removal; order changes are deterministic.
        i = sus_pos.pop(user)
        last = susceptible.pop()
        if last != user:
            susceptible[i] = last
            sus_pos[last] = i

    round_idx = 0
    while len(infected_order) < max_size and susceptible:
        round_idx += 1
        spreaders = [u for u in infected_order
                     if 0 < round_idx - infected_round[u] <= config.active_rounds]
        if not spreaders:
            break
        for u in spreaders:
            if not susceptible or len(infected_order) >= max_size:
                break
            n_contacts = min(config.fanout, len(susceptible))
            picks = rng.choice(len(susceptible), size=n_contacts, replace=False)
            # Materialize targets before mutating the pool; they are distinct
            # by construction. Erosion applies immediately, so a success
            # lowers the rate for this spreader's remaining contacts.
            targets = [susceptible[i] for i in picks]
            for v in targets:
                if rng.random() < effective_rate(float(rates[u]), cee, u):
                    remove_susceptible(v)
                    infected_order.append(v)
                    infected_round[v] = round_idx
                    parent[v] = u
                    cee.record_success(u)
                    if len(infected_order) >= max_size:
                        break

    nodes = tuple(
        CascadeNode(uid=f"u{v}",
                    parent=None if v == source else f"u{parent[v]}",
                    t=float(infected_round[v]))
        for v in infected_order
    )
    cid = cascade_id if cascade_id is not None else f"sim-{config.seed}"
    return Cascade(id=cid, label=Label.UNLABELED, nodes=nodes)


# ---------------------------------------------------------------------------
# Sequential attachment generator
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GenConfig:
    n_nodes: int
    seed: int
    score_mode: str = "degree"
    alpha: float = 1.0                  # fan-out exponent
    gamma: float = 1.0                  # attribute-similarity exponent
    selection: str = "proportional"
    cee: CeeConfig = CeeConfig()
    profiles: Optional[tuple[UserProfile, ...]] = None

    def __post_init__(self):
        if self.n_nodes < 1:
            raise ValueError("n_nodes must be >= 1")
        if self.score_mode not in SCORE_MODES:
            raise ValueError(f"score_mode must be one of {SCORE_MODES}")
        if self.selection not in SELECTIONS:
            raise ValueError(f"selection must be one of {SELECTIONS}")
        if self.alpha < 0.0 or self.gamma < 0.0:
            raise ValueError("alpha and gamma must be >= 0")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")
        if self.score_mode in ("attribute", "mixed") and not self.profiles:
            raise ValueError(f"score_mode {self.score_mode!r} requires a profile pool")


def _attribute_vectors(profiles: tuple[UserProfile, ...]) -> np.ndarray:
    """Min-max scaled attribute vectors over the pool, verified as 0/1."""
    raw = np.array([
        [p.fans, p.followings, p.tweets, p.registration_year, 1.0 if p.verified else 0.0]
        for p in profiles
    ], dtype=float)
    lo = raw.min(axis=0)
    span = raw.max(axis=0) - lo
    span[span == 0.0] = 1.0
    return (raw - lo) / span


def attribute_similarity(vec_a: np.ndarray, vec_b: np.ndarray) -> float:
    """Similarity in (0, 1]: reciprocal of 1 + Euclidean attribute distance."""
    return 1.0 / (1.0 + float(np.linalg.norm(vec_a - vec_b)))


def sequential_generate(config: GenConfig, cascade_id: Optional[str] = None) -> Cascade:
    """Grow a tree by scoring every existing node as the next parent.

    Node i joins at time t=i. Its attachment score for an existing node j
    multiplies an out-degree term (out_degree(j)+1)**alpha (degree and
    mixed modes), an attribute-similarity term sim(i,j)**gamma (attribute
    and mixed modes), and the credibility-erosion decay for j. ``argmax``
    picks the best-scoring node, ties resolved to the lowest insertion
    index; ``proportional`` samples with probability proportional to the
    scores.
    """
    rng = np.random.default_rng(config.seed)
    n = config.n_nodes
    use_degree = config.score_mode in ("degree", "mixed")
    use_attrs = config.score_mode in ("attribute", "mixed")

    vectors = None
    if use_attrs:
        pool = config.profiles
        pool_vectors = _attribute_vectors(pool)
        assigned = rng.integers(len(pool), size=n)
        vectors = pool_vectors[assigned]

    out_degree = np.zeros(n)
    parents: list[int] = []
    for i in range(1, n):
        scores = np.ones(i)
        if use_degree:
            scores *= (out_degree[:i] + 1.0) ** config.alpha
        if use_attrs:
            dist = np.linalg.norm(vectors[:i] - vectors[i], axis=1)
            scores *= (1.0 / (1.0 + dist)) ** config.gamma
        mode = config.cee.mode
        if mode == "geometric":
            scores *= config.cee.beta ** out_degree[:i]
        elif mode == "entropy":
            scores *= 1.0 / (1.0 + out_degree[:i] * config.cee.delta_s)
        if config.selection == "argmax":
            j = int(np.argmax(scores))     # ties -> lowest insertion index
        else:
            total = scores.sum()
            if total <= 0.0 or not np.isfinite(total):
                # All scores underflowed; fall back to a uniform pick.
                j = int(rng.integers(i))
            else:
                j = int(rng.choice(i, p=scores / total))
        parents.append(j)
        out_degree[j] += 1

    nodes = tuple(
        CascadeNode(uid=f"u{i}",
                    parent=None if i == 0 else f"u{parents[i - 1]}",
                    t=float(i))
        for i in range(n)
    )
    cid = cascade_id if cascade_id is not None else f"gen-{config.seed}"
    return Cascade(id=cid, label=Label.UNLABELED, nodes=nodes)


# ---------------------------------------------------------------------------
# Ensembles
# ---------------------------------------------------------------------------

def run_ensemble(config: ScenarioConfig | GenConfig, runs: int) -> Corpus:
    """Run the generator ``runs`` times with derived seeds seed+i.

    Cascade ids are run-0 .. run-(runs-1) and labels are left unset.
    Because each run owns its RNG, splitting the runs across workers
    cannot change the result.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    cascades = []
    for i in range(runs):
        run_config = replace(config, seed=config.seed + i)
        if isinstance(config, ScenarioConfig):
            cascade = run_meanfield(run_config, cascade_id=f"run-{i}")
        else:
            cascade = sequential_generate(run_config, cascade_id=f"run-{i}")
        cascades.append(cascade)
    return make_corpus(cascades)
