import json

import numpy as np
import pytest

from cascadelab.corpus import Cascade, CascadeNode, Label, make_corpus


def chain(n: int, cid: str = "chain", label: Label = Label.UNLABELED,
          times=None) -> Cascade:
    """Path of n nodes rooted at index 0; default times 0,1,2,..."""
    if times is None:
        times = list(range(n))
    nodes = [CascadeNode(uid="n0", parent=None, t=float(times[0]))]
    for i in range(1, n):
        nodes.append(CascadeNode(uid=f"n{i}", parent=f"n{i-1}", t=float(times[i])))
    return Cascade(id=cid, label=label, nodes=tuple(nodes))


def star(leaves: int, cid: str = "star", label: Label = Label.UNLABELED,
         leaf_t: float = 1.0) -> Cascade:
    nodes = [CascadeNode(uid="root", parent=None, t=0.0)]
    for i in range(leaves):
        nodes.append(CascadeNode(uid=f"leaf{i}", parent="root", t=leaf_t))
    return Cascade(id=cid, label=label, nodes=tuple(nodes))


def tree_from_edges(edges, cid: str = "tree", label: Label = Label.UNLABELED,
                    times=None) -> Cascade:
    """Cascade from (child, parent) pairs; node '0' is the root."""
    uids = {"0"}
    for child, parent in edges:
        uids.update((child, parent))
    if times is None:
        times = {}
    nodes = [CascadeNode(uid="0", parent=None, t=0.0)]
    parent_of = {child: parent for child, parent in edges}
    for uid in sorted(uids - {"0"}, key=int):
        nodes.append(CascadeNode(uid=uid, parent=parent_of[uid],
                                 t=float(times.get(uid, 1.0))))
    return Cascade(id=cid, label=label, nodes=tuple(nodes))


def random_tree(n: int, rng: np.random.Generator, cid: str = "rand",
                label: Label = Label.UNLABELED) -> Cascade:
    """Uniform random recursive tree with non-decreasing integer times."""
    nodes = [CascadeNode(uid="0", parent=None, t=0.0)]
    times = {0: 0.0}
    for i in range(1, n):
        p = int(rng.integers(i))
        t = times[p] + float(rng.integers(0, 5))
        times[i] = t
        nodes.append(CascadeNode(uid=str(i), parent=str(p), t=t))
    return Cascade(id=cid, label=label, nodes=tuple(nodes))


def write_ndjson(path, records) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record) + "\n")


@pytest.fixture
def two_chain_corpus():
    return make_corpus([
        chain(3, cid="c3", label=Label.RUMOR),
        chain(5, cid="c5", label=Label.NON_RUMOR),
    ])
