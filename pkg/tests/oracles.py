"""Independent recounts over raw transcript dictionaries.

These deliberately avoid the package's helpers: neighbour sets come from the
edge list, bins from exact fractions.
"""

from fractions import Fraction
from math import floor


def _neighbour_sets(n, edges):
    nbrs = [set() for _ in range(n)]
    for u, v in edges:
        nbrs[u].add(v)
        nbrs[v].add(u)
    return nbrs


def recount_influence(raw_transcripts, edges_by_label, n_by_label, correct_by_qid, bins):
    cells, isolated = {}, {}
    for raw in raw_transcripts:
        nbrs = _neighbour_sets(n_by_label[raw["network_label"]], edges_by_label[raw["network_label"]])
        correct = correct_by_qid[raw["question_id"]]
        biased = {b["node"] for b in raw["bias"]}
        grid = [{e["node"]: e["label"] for e in row} for row in raw["rounds"]]
        for r in range(2, len(grid) + 1):
            for v in grid[r - 1]:
                if v in biased:
                    continue
                prev = grid[r - 2][v] == correct
                hit = grid[r - 1][v] == correct
                if not nbrs[v]:
                    key, target = (r, prev), isolated
                else:
                    frac = Fraction(sum(grid[r - 2][w] == correct for w in nbrs[v]), len(nbrs[v]))
                    key, target = (r, prev, min(floor(frac * bins), bins - 1)), cells
                n, k = target.get(key, (0, 0))
                target[key] = (n + 1, k + hit)
    return cells, isolated


def recount_transitions(raw_transcripts, correct_by_qid):
    counts = {}
    for raw in raw_transcripts:
        correct = correct_by_qid[raw["question_id"]]
        biased = {b["node"] for b in raw["bias"]}
        grid = [{e["node"]: e["label"] for e in row} for row in raw["rounds"]]
        for r in range(1, len(grid)):
            for v, label in grid[r - 1].items():
                if v in biased:
                    continue
                key = (r, label == correct, grid[r][v] == correct)
                counts[key] = counts.get(key, 0) + 1
    return counts


def transitions_as_keys(report):
    names = {(True, True): "correct->correct", (False, False): "incorrect->incorrect",
             (False, True): "incorrect->correct", (True, False): "correct->incorrect"}
    out = {}
    for i, row in enumerate(report.pairs, start=1):
        for key, name in names.items():
            if row[name]:
                out[(i,) + key] = row[name]
    return out


def table_as_keys(table):
    cells = {key: tuple(v) for key, v in table.cells.items() if v[0]}
    isolated = {key: tuple(v) for key, v in table.isolated.items() if v[0]}
    return cells, isolated
