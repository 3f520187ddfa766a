"""Data-stream association and degrees-of-freedom analysis.

A ``StreamAssociation`` assigns each of J data streams a nonempty, disjoint
group of available GBSs that decode it.  An occupied GBS can cancel a
stream iff at least one of its backhaul neighbours decodes that stream;
everything else must be handled by beamforming.  The achievable DoF is a
pure counting condition on the association: stream j survives iff the
number of channels its beam must null (occupied GBSs that cannot obtain
the stream, plus every other stream's decoding GBSs) is below the antenna
count M.
"""

import json
from dataclasses import dataclass

import numpy as np

from .network import Topology


@dataclass(frozen=True)
class StreamAssociation:
    """Disjoint nonempty decode groups, one per stream."""

    groups: tuple   # tuple of frozensets of available GBS ids

    def __post_init__(self):
        groups = tuple(frozenset(g) for g in self.groups)
        object.__setattr__(self, "groups", groups)
        if any(len(g) == 0 for g in groups):
            raise ValueError("every stream needs at least one decoding GBS")
        total = sum(len(g) for g in groups)
        if len(frozenset().union(*groups) if groups else frozenset()) != total:
            raise ValueError("decode groups must be disjoint")

    @property
    def n_streams(self) -> int:
        return len(self.groups)

    def assigned(self) -> frozenset:
        return frozenset().union(*self.groups) if self.groups else frozenset()

    def validate(self, topology: Topology) -> list:
        problems = []
        stray = self.assigned() - topology.available
        if stray:
            problems.append(f"groups reference non-available GBSs: {sorted(stray)}")
        return problems

    def __str__(self):
        return "/".join("{" + ",".join(map(str, sorted(g))) + "}" for g in self.groups)


def parse_association(literal) -> StreamAssociation:
    """Parse the ``[[4,7],[5,8],[6]]`` nested-list syntax used in configs."""
    if isinstance(literal, str):
        literal = json.loads(literal)
    return StreamAssociation(tuple(frozenset(int(x) for x in g) for g in literal))


@dataclass(frozen=True)
class DerivedSets:
    """Cancellation bookkeeping derived from a topology and an association.

    ``forwarders[(n1, j)]``    available neighbours of occupied GBS n1 that
                               decode stream j (and can forward it);
    ``residual_streams[n1]``   streams n1 cannot obtain, whose interference
                               the UAV must keep below the temperature limit;
    ``unreachable_occupied[j]`` occupied GBSs that cannot obtain stream j.
    """

    forwarders: dict
    residual_streams: dict
    unreachable_occupied: tuple


def derive_sets(topology: Topology, assoc: StreamAssociation) -> DerivedSets:
    forwarders = {}
    residual = {}
    for n1 in sorted(topology.occupied):
        cannot = set()
        for j, group in enumerate(assoc.groups):
            omega = frozenset(topology.backhaul[n1] & group)
            forwarders[(n1, j)] = omega
            if not omega:
                cannot.add(j)
        residual[n1] = frozenset(cannot)
    unreachable = tuple(
        frozenset(n1 for n1 in topology.occupied if j in residual[n1])
        for j in range(assoc.n_streams)
    )
    return DerivedSets(forwarders=forwarders,
                       residual_streams=residual,
                       unreachable_occupied=unreachable)


def dof_feasible(topology: Topology, m: int, assoc: StreamAssociation) -> bool:
    """Whether every stream of ``assoc`` can be made interference-free.

    Stream j needs its beam orthogonal to the channels of the occupied GBSs
    that cannot obtain it and of every other stream's decoding GBSs; with
    generic channels that null space is nonempty iff the count of those
    constraints is strictly below the antenna count m.
    """
    sets = derive_sets(topology, assoc)
    total = sum(len(g) for g in assoc.groups)
    for j, group in enumerate(assoc.groups):
        nulled = len(sets.unreachable_occupied[j]) + (total - len(group))
        if nulled >= m:
            return False
    return True


def _canonical_assignments(available_sorted, n_streams):
    """Yield stream labels (0 = unused) over the available GBSs.

    Labels form restricted-growth strings: stream k can only appear after
    streams 1..k-1, which enumerates each unordered association exactly
    once with streams sorted by their smallest member.  Order is
    lexicographic in the label vector, hence deterministic.
    """
    n = len(available_sorted)
    labels = [0] * n

    def rec(i, used):
        if n - i < n_streams - used:
            return  # not enough slots left to open the remaining streams
        if i == n:
            if used == n_streams:
                yield tuple(labels)
            return
        for lab in range(0, min(n_streams, used + 1) + 1):
            labels[i] = lab
            yield from rec(i + 1, max(used, lab))
        labels[i] = 0

    yield from rec(0, 0)


def _groups_from_labels(available_sorted, labels, n_streams):
    groups = [set() for _ in range(n_streams)]
    for gbs, lab in zip(available_sorted, labels):
        if lab > 0:
            groups[lab - 1].add(gbs)
    return StreamAssociation(tuple(frozenset(g) for g in groups))


def enumerate_feasible(topology: Topology, m: int, n_streams: int,
                       cap: int = 64) -> list:
    """Up to ``cap`` DoF-feasible associations with exactly ``n_streams``
    streams, in canonical (deterministic) order."""
    if n_streams < 1 or cap < 1:
        raise ValueError("need n_streams >= 1 and cap >= 1")
    available_sorted = sorted(topology.available)
    found = []
    for labels in _canonical_assignments(available_sorted, n_streams):
        assoc = _groups_from_labels(available_sorted, labels, n_streams)
        if dof_feasible(topology, m, assoc):
            found.append(assoc)
            if len(found) >= cap:
                break
    return found


def max_dof(topology: Topology, m: int):
    """Largest achievable stream count and one witness association.

    Searches J downward from min(m, |available|); feasibility is monotone
    in J (dropping a stream only relaxes the counting condition), so the
    first hit is the maximum.  Returns (0, None) when not even one stream
    is feasible.
    """
    n2 = len(topology.available)
    for j in range(min(m, n2), 0, -1):
        witnesses = enumerate_feasible(topology, m, j, cap=1)
        if witnesses:
            return j, witnesses[0]
    return 0, None


def full_cooperation_dof(m: int, n_available: int) -> int:
    """DoF when every occupied GBS is backhauled to all available GBSs."""
    if m < 0 or n_available < 0:
        raise ValueError("sizes must be nonnegative")
    return min(m, n_available)


def no_cooperation_dof(m: int, n_occupied: int, n_available: int) -> int:
    """DoF with isolated GBSs (cognitive beamforming / local SIC only)."""
    if m < 0 or n_occupied < 0 or n_available < 0:
        raise ValueError("sizes must be nonnegative")
    return min(max(m - n_occupied, 0), n_available)
