"""Turning an observation table into a PDFA.

Pipeline: group rows within tolerance into connected components, split
groups whose members provably route to different groups (determinism),
split groups that are not tolerance-cliques along their widest column,
re-run the determinism pass, then read off states, transitions and
weights.  Splits only ever refine the partition, and cluster order is kept
deterministic throughout: sub-clusters replace their parent in place,
ordered by the cluster they route to (determinism splits) or by interval
(clique splits).
"""

from __future__ import annotations

import math

import numpy as np

from .model import Pdfa
from .table import ObservationTable, t_equal


class Clustering:
    """An ordered partition of the table's prefixes.

    clusters: list of member lists (members in row insertion order).
    List position doubles as the cluster's creation rank for tie-breaking.
    """

    def __init__(self, clusters):
        self.clusters = [list(c) for c in clusters]
        self._rebuild()

    def _rebuild(self):
        self.of = {}
        for ci, members in enumerate(self.clusters):
            for p in members:
                self.of[p] = ci

    def replace(self, ci, subs):
        self.clusters[ci:ci + 1] = [list(s) for s in subs if s]
        self._rebuild()

    def as_sets(self) -> set[frozenset]:
        return {frozenset(c) for c in self.clusters}

    def __len__(self):
        return len(self.clusters)


def initial_clustering(tbl: ObservationTable, t: float) -> Clustering:
    """Connected components of the within-tolerance graph on rows, ordered
    by first member; members keep row order."""
    seen = set()
    clusters = []
    for p in tbl.prefixes:
        if p in seen:
            continue
        comp = []
        frontier = [p]
        seen.add(p)
        while frontier:
            q = frontier.pop()
            comp.append(q)
            for r in tbl.close_rows(tbl.rows[q]):
                if r not in seen:
                    seen.add(r)
                    frontier.append(r)
        comp.sort(key=tbl.p_index.__getitem__)
        clusters.append(comp)
    return Clustering(clusters)


def _is_clique(members, tbl, t) -> bool:
    rows = [tbl.rows[p] for p in members]
    for i in range(len(rows)):
        for j in range(i + 1, len(rows)):
            if not t_equal(rows[i], rows[j], t):
                return False
    return True


def best_cluster_match(vec, cl: Clustering, tbl: ObservationTable, t: float,
                       arbitrary: bool = False) -> int:
    """Pick the cluster a row vector belongs with.

    Clusters are filtered through three preference tiers -- (1) adding the
    row keeps the cluster a clique, (2) some member is within tolerance and
    the cluster is not a clique, (3) some member is within tolerance --
    falling back to all clusters when every tier is empty.  Within the
    surviving tier the cluster with the smallest minimum row distance wins;
    ties go to the earliest cluster.
    """
    pool = range(len(cl.clusters))
    tiers = ([], [], [])
    for ci in pool:
        members = cl.clusters[ci]
        eq = [t_equal(vec, tbl.rows[p], t) for p in members]
        if all(eq) and _is_clique(members, tbl, t):
            tiers[0].append(ci)
        elif any(eq):
            if not _is_clique(members, tbl, t):
                tiers[1].append(ci)
            tiers[2].append(ci)
    chosen = next((tier for tier in tiers if tier), list(pool))
    if arbitrary:
        return chosen[0]
    best_ci = None
    best_d = math.inf
    for ci in chosen:
        d = min(float(np.max(np.abs(vec - tbl.rows[p])))
                for p in cl.clusters[ci])
        if d < best_d:
            best_d = d
            best_ci = ci
    return best_ci


def refine_determinism(cl: Clustering, tbl: ObservationTable, t: float,
                       arbitrary: bool = False) -> Clustering:
    """Split clusters until members of each cluster agree on the cluster of
    every in-table successor.  Members whose successor row is not in the
    table join whichever forming sub-cluster matches that row best."""
    n = len(tbl.alphabet)
    changed = True
    while changed:
        changed = False
        for ci, members in enumerate(cl.clusters):
            for s in range(n):
                keys = []
                by_key = {}
                unknown = []
                for p in members:
                    child = p + (s,)
                    ki = cl.of.get(child)
                    if ki is None:
                        unknown.append(p)
                    else:
                        if ki not in by_key:
                            by_key[ki] = []
                            keys.append(ki)
                        by_key[ki].append(p)
                if len(keys) < 2:
                    continue
                # Forming sub-clusters, ordered by target cluster rank.
                keys.sort()
                subs = [by_key[k] for k in keys]
                sub_cl = Clustering(subs)
                for p in unknown:
                    j = best_cluster_match(tbl.seq_row(p + (s,)), sub_cl,
                                           tbl, t, arbitrary)
                    sub_cl.clusters[j].append(p)
                for sub in sub_cl.clusters:
                    sub.sort(key=tbl.p_index.__getitem__)
                cl.replace(ci, sub_cl.clusters)
                changed = True
                break
            if changed:
                break
    return cl


def refine_cliques(cl: Clustering, tbl: ObservationTable, t: float) -> Clustering:
    """Split non-clique clusters along the column with the widest value
    range into equal-width intervals until every cluster is a clique."""
    changed = True
    while changed:
        changed = False
        for ci, members in enumerate(cl.clusters):
            if _is_clique(members, tbl, t):
                continue
            rows = np.array([tbl.rows[p] for p in members])
            ranges = rows.max(axis=0) - rows.min(axis=0)
            col = int(np.argmax(ranges))
            values = rows[:, col]
            vmin = float(values.min())
            if t == 0.0:
                # Exact grouping by value, ascending.
                distinct = sorted(set(float(v) for v in values))
                bin_of = {v: i for i, v in enumerate(distinct)}
                bins = [bin_of[float(v)] for v in values]
                k = len(distinct)
            else:
                r = float(ranges[col])
                k = math.ceil(r / t)
                width = r / k
                bins = []
                for v in values:
                    if float(v) == vmin:
                        bins.append(0)
                    else:
                        b = math.ceil((float(v) - vmin) / width) - 1
                        bins.append(min(max(b, 0), k - 1))
            subs = [[] for _ in range(k)]
            for p, b in zip(members, bins):
                subs[b].append(p)
            cl.replace(ci, subs)   # drops empty bins, keeps interval order
            changed = True
            break
    return cl


def cluster_table(tbl: ObservationTable):
    """Full pipeline; returns (clustering, stage snapshots as sets)."""
    t = tbl.cfg.tolerance
    arb = tbl.cfg.arbitrary_cluster_match
    cl = initial_clustering(tbl, t)
    stages = [cl.as_sets()]
    cl = refine_determinism(cl, tbl, t, arb)
    stages.append(cl.as_sets())
    cl = refine_cliques(cl, tbl, t)
    stages.append(cl.as_sets())
    cl = refine_determinism(cl, tbl, t, arb)
    stages.append(cl.as_sets())
    return cl, stages


def build_pdfa(cl: Clustering, tbl: ObservationTable) -> Pdfa:
    """Read a PDFA off a deterministic clique clustering.

    Transitions come from in-table successors where any exist; otherwise
    the hole is filled by matching the successor row of the cluster's
    heaviest member.  Weights are the prefix-weighted average of member
    next-step probabilities, clamped into the members' own value range so
    rounding cannot push a weight past the spread the clique allows.
    """
    t = tbl.cfg.tolerance
    n = len(tbl.alphabet)
    n_states = len(cl.clusters)
    trans = np.zeros((n_states, n), dtype=np.int64)
    weights = np.zeros((n_states, n + 1))
    for ci, members in enumerate(cl.clusters):
        pw = np.array([tbl.weights.prefix_prob(p) for p in members])
        for s in range(n):
            targets = {cl.of[p + (s,)] for p in members if p + (s,) in cl.of}
            if targets:
                if len(targets) > 1:
                    raise RuntimeError("clustering is not deterministic on "
                                       "cluster %d token %d" % (ci, s))
                trans[ci, s] = targets.pop()
            else:
                heavy = members[int(np.argmax(pw))]
                trans[ci, s] = best_cluster_match(
                    tbl.seq_row(heavy + (s,)), cl, tbl, t,
                    tbl.cfg.arbitrary_cluster_match)
        for s in range(n + 1):
            vals = np.array([tbl.weights.last_token_prob(p + (s,))
                             for p in members])
            total = pw.sum()
            if total == 0.0:
                weights[ci, s] = vals.mean()
            else:
                avg = float(pw @ vals) / total
                weights[ci, s] = min(max(avg, float(vals.min())),
                                     float(vals.max()))
    return Pdfa(tbl.alphabet, trans, weights, initial=cl.of[()])
