"""Shared helpers: brute-force oracles and graph generators for tests."""
import itertools

from hypothesis import strategies as st

from anonqnet.topology import build_graph, catalog


def catalog_cases(n_min, n_max, names=("ring", "path", "complete", "star")):
    """(name, n, topology) for every catalog family in the size range."""
    out = []
    for name in names:
        for n in range(max(n_min, 2), n_max + 1):
            out.append((name, n, catalog(name, n)))
    return out


def case_ids(cases):
    return [f"{name}-{n}" for name, n, _topo in cases]


# brute-force oracles: these never touch the simulator


def oracle_all_zeros(x):
    return 1 if sum(x) == 0 else 0


def oracle_weight_is_one(x):
    return 1 if sum(x) == 1 else 0


def oracle_consistency(pairs):
    marked = [r for r, z in pairs if z == 1]
    return 1 if (not marked or len(set(marked)) == 1) else 0


def oracle_modular_sum(x, k):
    return sum(x) % k


def all_bit_vectors(n):
    return list(itertools.product(range(2), repeat=n))


@st.composite
def connected_graphs(draw, max_n=6):
    """Random connected simple graph: a random tree plus extra edges."""
    n = draw(st.integers(min_value=2, max_value=max_n))
    edges = set()
    for v in range(1, n):
        parent = draw(st.integers(min_value=0, max_value=v - 1))
        edges.add((parent, v))
    candidates = [(u, v) for u in range(n) for v in range(u + 1, n)
                  if (u, v) not in edges]
    extra = draw(st.lists(st.sampled_from(candidates), unique=True, max_size=len(candidates))
                 if candidates else st.just([]))
    edges.update(extra)
    return build_graph(n, sorted(edges))
