"""Cascade data model, file ingestion, and profile joining.

A cascade is a rooted propagation tree: each node records the receiving
user, the user it received from (its parent), and the reception time in
seconds since the cascade started. Cascades arrive as newline-delimited
JSON, one cascade per line:

    {"id": "c1", "label": "rumor", "nodes": [
        {"uid": "a", "parent": null, "t": 0},
        {"uid": "b", "parent": "a", "t": 12.5}]}

``label`` is ``"rumor"``, ``"non-rumor"``, or ``null``. Exactly one node
has ``parent: null`` (the source). A node may carry an optional
``"profile"`` object (same fields as the profile CSV); the serializer
emits it so that a joined corpus round-trips.

User profiles arrive as CSV with header
``uid,fans,followings,tweets,registration_year,verified``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from datetime import date
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Optional


MIN_REGISTRATION_YEAR = 2004


class CorpusError(Exception):
    """Base class for ingestion failures."""


class ParseError(CorpusError):
    """A record could not be decoded or is structurally malformed."""

    def __init__(self, message: str, *, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(CorpusError):
    """A decoded cascade or profile violates a model invariant."""

    def __init__(self, message: str, *, cascade_id: Optional[str] = None,
                 uid: Optional[str] = None):
        self.cascade_id = cascade_id
        self.uid = uid
        parts = []
        if cascade_id is not None:
            parts.append(f"cascade {cascade_id!r}")
        if uid is not None:
            parts.append(f"node {uid!r}")
        prefix = ", ".join(parts)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class Label(str, Enum):
    RUMOR = "rumor"
    NON_RUMOR = "non-rumor"
    UNLABELED = "unlabeled"

    @classmethod
    def from_json(cls, raw) -> "Label":
        if raw is None:
            return cls.UNLABELED
        if raw == cls.RUMOR.value:
            return cls.RUMOR
        if raw == cls.NON_RUMOR.value:
            return cls.NON_RUMOR
        raise ValueError(f"unknown label {raw!r}")

    def to_json(self):
        return None if self is Label.UNLABELED else self.value


@dataclass(frozen=True)
class UserProfile:
    uid: str
    fans: int
    followings: int
    tweets: int
    registration_year: int
    verified: bool

    def validate(self) -> "UserProfile":
        if not self.uid:
            raise ValidationError("profile uid is empty")
        for name in ("fans", "followings", "tweets"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be >= 0", uid=self.uid)
        current_year = date.today().year
        if not MIN_REGISTRATION_YEAR <= self.registration_year <= current_year:
            raise ValidationError(
                f"registration_year {self.registration_year} outside "
                f"[{MIN_REGISTRATION_YEAR}, {current_year}]", uid=self.uid)
        return self


@dataclass(frozen=True)
class CascadeNode:
    uid: str
    parent: Optional[str]
    t: float
    profile: Optional[UserProfile] = None

    @property
    def is_root(self) -> bool:
        return self.parent is None


@dataclass(frozen=True)
class Cascade:
    id: str
    label: Label
    nodes: tuple[CascadeNode, ...]

    @property
    def size(self) -> int:
        return len(self.nodes)

    @property
    def root(self) -> CascadeNode:
        for node in self.nodes:
            if node.is_root:
                return node
        raise ValidationError("no root node", cascade_id=self.id)

    def node_by_uid(self, uid: str) -> CascadeNode:
        for node in self.nodes:
            if node.uid == uid:
                return node
        raise KeyError(uid)

    def children_index(self) -> dict[str, list[str]]:
        """Map uid -> uids of direct children, in node order."""
        children: dict[str, list[str]] = {n.uid: [] for n in self.nodes}
        for node in self.nodes:
            if node.parent is not None:
                children[node.parent].append(node.uid)
        return children


@dataclass(frozen=True)
class Corpus:
    cascades: tuple[Cascade, ...]
    profile_coverage: float = field(default=0.0)

    def __post_init__(self):
        seen = set()
        for cascade in self.cascades:
            if cascade.id in seen:
                raise ValidationError("duplicate cascade id", cascade_id=cascade.id)
            seen.add(cascade.id)

    def __len__(self) -> int:
        return len(self.cascades)

    def __iter__(self) -> Iterator[Cascade]:
        return iter(self.cascades)


def _coverage(cascades: Iterable[Cascade]) -> float:
    total = 0
    with_profile = 0
    for cascade in cascades:
        for node in cascade.nodes:
            total += 1
            if node.profile is not None:
                with_profile += 1
    return with_profile / total if total else 0.0


def make_corpus(cascades: Iterable[Cascade]) -> Corpus:
    cascades = tuple(cascades)
    return Corpus(cascades=cascades, profile_coverage=_coverage(cascades))


def validate_cascade(cascade: Cascade) -> Cascade:
    """Check every cascade invariant; raise ValidationError on the first breach.

    Enforced: at least one node, unique uids, exactly one root, parents
    resolve within the cascade, every node reachable from the root
    (acyclic connected tree), root at t=0, t non-decreasing along edges.
    """
    cid = cascade.id
    if not cascade.nodes:
        raise ValidationError("cascade has no nodes", cascade_id=cid)

    by_uid: dict[str, CascadeNode] = {}
    for node in cascade.nodes:
        if not node.uid:
            raise ValidationError("empty uid", cascade_id=cid)
        if node.uid in by_uid:
            raise ValidationError("duplicate uid", cascade_id=cid, uid=node.uid)
        by_uid[node.uid] = node

    roots = [n for n in cascade.nodes if n.is_root]
    if not roots:
        raise ValidationError("no root node (every node has a parent)", cascade_id=cid)
    if len(roots) > 1:
        raise ValidationError("multiple roots", cascade_id=cid, uid=roots[1].uid)
    root = roots[0]

    if root.t != 0:
        raise ValidationError(f"root time is {root.t}, expected 0",
                              cascade_id=cid, uid=root.uid)

    for node in cascade.nodes:
        if node.parent is None:
            continue
        parent = by_uid.get(node.parent)
        if parent is None:
            raise ValidationError(f"orphan parent {node.parent!r}",
                                  cascade_id=cid, uid=node.uid)
        if node.t < parent.t:
            raise ValidationError(
                f"time inversion: t={node.t} precedes parent t={parent.t}",
                cascade_id=cid, uid=node.uid)
    for node in cascade.nodes:
        if not math.isfinite(node.t) or node.t < 0:
            raise ValidationError(f"invalid time {node.t}", cascade_id=cid, uid=node.uid)

    # Reachability from the root rules out parent-link cycles.
    children = cascade.children_index()
    reached = {root.uid}
    frontier = [root.uid]
    while frontier:
        uid = frontier.pop()
        for child in children[uid]:
            reached.add(child)
            frontier.append(child)
    if len(reached) != len(by_uid):
        stray = next(uid for uid in by_uid if uid not in reached)
        raise ValidationError("unreachable from root (parent cycle)",
                              cascade_id=cid, uid=stray)
    return cascade


def _profile_from_json(raw: dict, uid: str) -> UserProfile:
    try:
        if not isinstance(raw["verified"], bool):
            raise ValueError("verified must be a boolean")
        return UserProfile(
            uid=uid,
            fans=int(raw["fans"]),
            followings=int(raw["followings"]),
            tweets=int(raw["tweets"]),
            registration_year=int(raw["registration_year"]),
            verified=raw["verified"],
        ).validate()
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"bad profile for node {uid!r}: {exc}") from exc


def _cascade_from_record(record: dict) -> Cascade:
    """Decode one NDJSON record and normalize times to cascade-relative."""
    if not isinstance(record, dict):
        raise ValueError("record is not an object")
    for key in ("id", "label", "nodes"):
        if key not in record:
            raise ValueError(f"missing key {key!r}")
    cid = record["id"]
    if not isinstance(cid, str) or not cid:
        raise ValueError("id must be a non-empty string")
    label = Label.from_json(record["label"])
    raw_nodes = record["nodes"]
    if not isinstance(raw_nodes, list) or not raw_nodes:
        raise ValueError("nodes must be a non-empty array")

    nodes = []
    root_t: Optional[float] = None
    for raw in raw_nodes:
        if not isinstance(raw, dict):
            raise ValueError("node is not an object")
        for key in ("uid", "parent", "t"):
            if key not in raw:
                raise ValueError(f"node missing key {key!r}")
        uid = raw["uid"]
        parent = raw["parent"]
        if not isinstance(uid, str) or not uid:
            raise ValueError("node uid must be a non-empty string")
        if parent is not None and not isinstance(parent, str):
            raise ValueError(f"node {uid!r}: parent must be a string or null")
        if not isinstance(raw["t"], (int, float)) or isinstance(raw["t"], bool):
            raise ValueError(f"node {uid!r}: t must be a number")
        t = float(raw["t"])
        if not math.isfinite(t) or t < 0:
            raise ValueError(f"node {uid!r}: t must be a finite number >= 0")
        profile = None
        if raw.get("profile") is not None:
            profile = _profile_from_json(raw["profile"], uid)
        if parent is None:
            if root_t is not None:
                # Leave to validate_cascade, which names the cascade id.
                root_t = min(root_t, t)
            else:
                root_t = t
        nodes.append(CascadeNode(uid=uid, parent=parent, t=t, profile=profile))

    # Absolute timestamps are normalized so the source sits at t = 0.
    if root_t is not None and root_t != 0:
        nodes = [replace(n, t=n.t - root_t) for n in nodes]

    return Cascade(id=cid, label=label, nodes=tuple(nodes))


def parse_cascades(path: str | Path) -> Corpus:
    """Parse and validate an NDJSON cascade file into a Corpus.

    Raises ParseError (with the 1-based line number) for undecodable or
    malformed records, ValidationError (naming the cascade and node) for
    records that decode but break a cascade invariant.
    """
    path = Path(path)
    cascades = []
    with path.open("r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line=lineno) from exc
            try:
                cascade = _cascade_from_record(record)
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno) from exc
            cascades.append(validate_cascade(cascade))
    return make_corpus(cascades)


def _profile_json(profile: UserProfile) -> dict:
    return {
        "fans": profile.fans,
        "followings": profile.followings,
        "tweets": profile.tweets,
        "registration_year": profile.registration_year,
        "verified": profile.verified,
    }


def cascade_to_record(cascade: Cascade) -> dict:
    nodes = []
    for node in cascade.nodes:
        raw = {"uid": node.uid, "parent": node.parent, "t": node.t}
        if node.profile is not None:
            raw["profile"] = _profile_json(node.profile)
        nodes.append(raw)
    return {"id": cascade.id, "label": cascade.label.to_json(), "nodes": nodes}


def write_cascades(corpus: Corpus, path: str | Path) -> None:
    """Serialize a corpus to NDJSON; inverse of parse_cascades."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as handle:
        for cascade in corpus:
            handle.write(json.dumps(cascade_to_record(cascade)))
            handle.write("\n")


PROFILE_HEADER = ["uid", "fans", "followings", "tweets", "registration_year", "verified"]


def read_profiles(path: str | Path) -> dict[str, UserProfile]:
    """Read a profile CSV into a uid-keyed table, preserving file order."""
    path = Path(path)
    profiles: dict[str, UserProfile] = {}
    with path.open("r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("profile file is empty (missing header)", line=1)
        if [h.strip() for h in header] != PROFILE_HEADER:
            raise ParseError(
                f"bad profile header {header!r}, expected {PROFILE_HEADER!r}", line=1)
        for rowno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(PROFILE_HEADER):
                raise ParseError(f"expected {len(PROFILE_HEADER)} fields, got {len(row)}",
                                 line=rowno)
            uid = row[0].strip()
            if uid in profiles:
                raise ParseError(f"duplicate uid {uid!r}", line=rowno)
            try:
                counts = [int(v) for v in row[1:5]]
            except ValueError:
                raise ParseError(f"non-numeric count field in row for uid {uid!r}",
                                 line=rowno)
            verified_raw = row[5].strip().lower()
            if verified_raw not in ("true", "false"):
                raise ParseError(f"verified must be true/false, got {row[5]!r}",
                                 line=rowno)
            profile = UserProfile(
                uid=uid,
                fans=counts[0],
                followings=counts[1],
                tweets=counts[2],
                registration_year=counts[3],
                verified=verified_raw == "true",
            )
            try:
                profile.validate()
            except ValidationError as exc:
                raise ParseError(str(exc), line=rowno) from exc
            profiles[uid] = profile
    return profiles


def write_profiles(profiles: Iterable[UserProfile], path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(PROFILE_HEADER)
        for p in profiles:
            writer.writerow([p.uid, p.fans, p.followings, p.tweets,
                             p.registration_year, "true" if p.verified else "false"])


def attach_profiles(corpus: Corpus, path: str | Path) -> Corpus:
    """Join a profile CSV onto cascade nodes by uid.

    Nodes whose uid appears in the table carry that profile; unmatched
    nodes keep whatever they had (absent stays absent). Idempotent for
    the same table. Returns a new Corpus with coverage recomputed.
    """
    table = read_profiles(path)
    cascades = []
    for cascade in corpus:
        nodes = tuple(
            replace(node, profile=table[node.uid]) if node.uid in table else node
            for node in cascade.nodes
        )
        cascades.append(replace(cascade, nodes=nodes))
    return make_corpus(cascades)


@dataclass(frozen=True)
class GroupSummary:
    count: int
    size_min: int
    size_max: int
    size_mean: float
    depth_min: int
    depth_max: int
    depth_mean: float


@dataclass(frozen=True)
class CorpusSummary:
    n_cascades: int
    n_nodes: int
    n_users: int                       # distinct uids across the corpus
    profile_coverage: float
    overall: GroupSummary
    per_label: dict[str, GroupSummary]  # keyed by Label.value, present labels only


def _summarize(sizes: list[int], depths: list[int]) -> GroupSummary:
    return GroupSummary(
        count=len(sizes),
        size_min=min(sizes), size_max=max(sizes),
        size_mean=sum(sizes) / len(sizes),
        depth_min=min(depths), depth_max=max(depths),
        depth_mean=sum(depths) / len(depths),
    )


def corpus_summary(corpus: Corpus) -> CorpusSummary:
    """Counts plus size/depth ranges, overall and per label."""
    from . import topo  # local import; topo depends on this module

    if len(corpus) == 0:
        raise ValidationError("empty corpus")

    sizes: dict[str, list[int]] = {}
    depths: dict[str, list[int]] = {}
    users: set[str] = set()
    n_nodes = 0
    for cascade in corpus:
        n_nodes += cascade.size
        users.update(node.uid for node in cascade.nodes)
        sizes.setdefault(cascade.label.value, []).append(cascade.size)
        depths.setdefault(cascade.label.value, []).append(topo.depth(cascade))

    all_sizes = [s for group in sizes.values() for s in group]
    all_depths = [d for group in depths.values() for d in group]
    return CorpusSummary(
        n_cascades=len(corpus),
        n_nodes=n_nodes,
        n_users=len(users),
        profile_coverage=corpus.profile_coverage,
        overall=_summarize(all_sizes, all_depths),
        per_label={lab: _summarize(sizes[lab], depths[lab]) for lab in sorted(sizes)},
    )
