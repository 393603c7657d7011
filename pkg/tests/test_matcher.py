import heapq
import itertools
import math

import numpy as np
import pytest

from polyest.matcher import (
    Matching,
    MatchingError,
    MatchingGraph,
    apply_correction,
    build_graphs,
    dump_edge_classes,
    min_weight_perfect_matching,
    solve_matching,
)
from polyest.surface_sim import Rates, enumerate_single_faults, get_layout


# ---------------------------------------------------------------------------
# Reference implementation: explicit space-time graph expansion, stdlib
# Dijkstra and exhaustive enumeration of pairings.  Shares no shortest-path
# or matching code with the package.
# ---------------------------------------------------------------------------


def _expanded_adjacency(graph, n_rows, with_boundary):
    adj = {}

    def add(a, b, w):
        adj.setdefault(a, []).append((b, w))
        adj.setdefault(b, []).append((a, w))

    for (sa, sb, dt), (_, w, _mask) in graph.edges.items():
        for t in range(n_rows):
            if 0 <= t + dt < n_rows:
                add((sa, t), (sb, t + dt), w)
    if with_boundary:
        for s, (_, w, _mask) in graph.boundary.items():
            for t in range(n_rows):
                add("V", (s, t), w)
    return adj


def _dijkstra(adj, src):
    dist = {src: 0.0}
    counter = itertools.count()
    heap = [(0.0, next(counter), src)]
    while heap:
        d, _, u = heapq.heappop(heap)
        if d > dist.get(u, math.inf):
            continue
        for v, w in adj.get(u, ()):
            nd = d + w
            if nd < dist.get(v, math.inf):
                dist[v] = nd
                heapq.heappush(heap, (nd, next(counter), v))
    return dist


class OracleTables:
    """Translation-invariant pair and boundary distances for one graph."""

    def __init__(self, graph, max_dt):
        self.max_dt = max_dt
        for half in (max_dt + 16, 2 * (max_dt + 16)):
            mid = half
            n_rows = 2 * half + 1
            direct = _expanded_adjacency(graph, n_rows, with_boundary=False)
            pair = {
                s: _dijkstra(direct, (s, mid)) for s in range(graph.n_sites)
            }
            full = _expanded_adjacency(graph, n_rows, with_boundary=True)
            bdist = _dijkstra(full, "V")
            boundary = [
                bdist.get((s, mid), math.inf) for s in range(graph.n_sites)
            ]
            probe = (
                [
                    pair[s].get((s2, mid + dt), math.inf)
                    for s in pair
                    for s2 in range(len(boundary))
                    for dt in range(-max_dt, max_dt + 1)
                ],
                boundary,
            )
            if hasattr(self, "_probe") and probe == self._probe:
                break
            self._probe = probe
            self._pair, self._boundary, self._mid = pair, boundary, mid
        else:
            raise AssertionError("oracle distances did not stabilize")

    def pair_weight(self, a, b):
        (sa, ta), (sb, tb) = a, b
        assert abs(tb - ta) <= self.max_dt
        return self._pair[sa].get((sb, self._mid + tb - ta), math.inf)

    def boundary_weight(self, a):
        return self._boundary[a[0]]


def _structures(indices, W, B):
    # every way to split the events into boundary legs and disjoint pairs
    if not indices:
        yield ()
        return
    i, rest = indices[0], indices[1:]
    if math.isfinite(B[i]):
        for tail in _structures(rest, W, B):
            yield (B[i],) + tail
    for k, j in enumerate(rest):
        if math.isfinite(W[i][j]):
            rem = rest[:k] + rest[k + 1 :]
            for tail in _structures(rem, W, B):
                yield (W[i][j],) + tail


def brute_force_total(events, tables):
    n = len(events)
    W = [[tables.pair_weight(events[i], events[j]) for j in range(n)] for i in range(n)]
    B = [tables.boundary_weight(e) for e in events]
    best = None
    for chosen in _structures(tuple(range(n)), W, B):
        total = math.fsum(sorted(chosen))
        if best is None or total < best:
            best = total
    return best


# ---------------------------------------------------------------------------
# Graph construction
# ---------------------------------------------------------------------------


def _graphs(rates):
    layout = get_layout(3)
    return build_graphs(enumerate_single_faults(layout), rates, layout)


def test_flip_only_graph_has_only_vertical_edges():
    graph_x, graph_z = _graphs(Rates(0.01, 0.02, 0, 0, 0))
    assert set(graph_x.edges) == {(s, s, 1) for s in range(graph_x.n_sites)}
    assert graph_x.boundary == {}
    for _, (p, w, mask) in graph_x.edges.items():
        assert p == 0.01
        assert w == -math.log(0.01)
        assert mask is False
    assert all(p == 0.02 for p, _, _ in graph_z.edges.values())

    m = min_weight_perfect_matching(graph_x, [(3, 1), (3, 2)])
    assert m == Matching((((3, 1), (3, 2)),), -math.log(0.01), False)

    # without boundary edges a lone event cannot be decoded
    with pytest.raises(MatchingError):
        min_weight_perfect_matching(graph_x, [(3, 1)])
    with pytest.raises(MatchingError):
        min_weight_perfect_matching(graph_x, [(0, 0), (1, 5)])


def test_zero_rates_give_empty_graphs():
    graph_x, graph_z = _graphs(Rates(0, 0, 0, 0, 0))
    for g in (graph_x, graph_z):
        assert g.edges == {} and g.boundary == {}
        assert min_weight_perfect_matching(g, []) == Matching((), 0.0, False)
        with pytest.raises(MatchingError):
            min_weight_perfect_matching(g, [(0, 0)])


def test_event_validation():
    graph_x, _ = _graphs(Rates(1e-3, 1e-3, 1e-3, 1e-3, 1e-2))
    with pytest.raises(MatchingError):
        min_weight_perfect_matching(graph_x, [(graph_x.n_sites, 0)])
    with pytest.raises(MatchingError):
        min_weight_perfect_matching(graph_x, [(-1, 0)])
    with pytest.raises(MatchingError):
        min_weight_perfect_matching(graph_x, [(0, -1)])
    with pytest.raises(MatchingError):
        min_weight_perfect_matching(graph_x, [(0, 1), (0, 1)])


def test_edge_probabilities_accumulate_across_faults():
    # the vertical class of a Z stabilizer collects the outcome flip and all
    # other faults with the same footprint, so its probability exceeds p0x
    graph_x, _ = _graphs(Rates(1e-3, 1e-3, 1e-3, 1e-3, 1e-2))
    for s in range(graph_x.n_sites):
        p, w, _ = graph_x.edges[(s, s, 1)]
        assert p > 1e-3
        assert w == -math.log(p)


def test_dump_edge_classes_shape():
    graph_x, _ = _graphs(Rates(1e-3, 1e-3, 1e-3, 1e-3, 1e-2))
    rows = dump_edge_classes(graph_x)
    assert len(rows) == len(graph_x.edges) + len(graph_x.boundary)
    for a, b, w, mask in rows:
        assert a.startswith("x:s")
        assert b == "boundary" or b.startswith("x:s")
        assert w > 0 and mask in (0, 1)


# ---------------------------------------------------------------------------
# solve_matching on synthetic inputs
# ---------------------------------------------------------------------------


def test_solve_matching_prefers_cheap_pairs():
    inf = math.inf
    W = np.full((4, 4), inf)
    for i, j, w in ((0, 1, 3.0), (1, 2, 3.5), (2, 3, 3.0)):
        W[i, j] = W[j, i] = w
    B = np.array([5.0, 5.0, 5.0, 5.0])
    atoms, total = solve_matching(W, B)
    assert sorted(atoms) == [("pair", 0, 1), ("pair", 2, 3)]
    assert total == math.fsum([3.0, 3.0])


def test_solve_matching_odd_cluster_uses_one_boundary_leg():
    inf = math.inf
    W = np.full((3, 3), inf)
    W[0, 1] = W[1, 0] = 3.0
    W[1, 2] = W[2, 1] = 3.5
    B = np.array([4.0, 9.0, 5.0])
    atoms, total = solve_matching(W, B)
    # pairing (1, 2) and sending 0 alone beats pairing (0, 1)
    assert sorted(atoms) == [("boundary", 0), ("pair", 1, 2)]
    assert total == math.fsum(sorted([3.5, 4.0]))


def test_solve_matching_boundary_cheaper_than_bad_pair():
    W = np.full((2, 2), 30.0)
    np.fill_diagonal(W, math.inf)
    B = np.array([1.0, 2.0])
    atoms, total = solve_matching(W, B)
    assert sorted(atoms) == [("boundary", 0), ("boundary", 1)]
    assert total == math.fsum(sorted([1.0, 2.0]))


def test_solve_matching_isolated_event_without_boundary_fails():
    W = np.full((1, 1), math.inf)
    with pytest.raises(MatchingError):
        solve_matching(W, np.array([math.inf]))


def test_apply_correction_truth_table():
    m_flip = Matching((), 0.0, True)
    m_none = Matching((), 0.0, False)
    assert apply_correction(m_none, False) is False
    assert apply_correction(m_none, True) is True
    assert apply_correction(m_flip, False) is True
    assert apply_correction(m_flip, True) is False


# ---------------------------------------------------------------------------
# Randomized instances against the reference implementation
# ---------------------------------------------------------------------------

_RATE_DRAWS = (
    Rates(2e-3, 2e-3, 2e-3, 2e-3, 8e-3),   # generic mixed noise
    Rates(1e-2, 1e-3, 0.0, 5e-3, 2e-3),    # lopsided outcome flips
    Rates(0.0, 0.0, 0.0, 0.0, 1.5e-2),     # pure two-qubit noise
    Rates(0.0, 0.0, 6e-3, 6e-3, 0.0),      # idle only, no time-like edges
    Rates(5e-2, 5e-2, 1e-2, 1e-2, 5e-2),   # heavy noise, short weights
)

_ROUNDS = 8


def _instances(seed, graph, count):
    rng = np.random.default_rng(seed)
    nodes = [(s, t) for s in range(graph.n_sites) for t in range(_ROUNDS + 1)]
    for _ in range(count):
        n = int(rng.integers(1, 11))
        picks = rng.choice(len(nodes), size=n, replace=False)
        yield [nodes[i] for i in picks]


@pytest.mark.parametrize("draw", range(len(_RATE_DRAWS)))
def test_decoder_total_weight_matches_brute_force(draw):
    rates = _RATE_DRAWS[draw]
    graphs = _graphs(rates)
    for kind, graph in zip("xz", graphs):
        if not graph.boundary:
            continue
        tables = OracleTables(graph, _ROUNDS)
        for events in _instances(1000 * draw + ord(kind), graph, 110):
            matching = min_weight_perfect_matching(graph, events)
            expected = brute_force_total(events, tables)
            assert matching.total_weight == expected, (rates, kind, events)
            decoded = [e for pair in matching.pairs for e in pair if e is not None]
            assert sorted(decoded) == sorted(events)


def test_decoder_is_deterministic_across_rebuilds():
    events = [(0, 0), (3, 2), (4, 2), (5, 7)]
    results = []
    for _ in range(2):
        graph_x, _ = _graphs(Rates(2e-3, 2e-3, 2e-3, 2e-3, 8e-3))
        results.append(min_weight_perfect_matching(graph_x, events))
    assert results[0] == results[1]
