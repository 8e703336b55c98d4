"""Brute-force reference implementations used to cross-check the package.

Everything here is deliberately slow and simple: independent code paths
that recompute expected answers from first principles.
"""


def bpe_oracle(ranks, text):
    """Encode by applying merges in ascending rank order until stable."""
    parts = [bytes([b]) for b in text.encode("utf-8")]
    merges = sorted((rank, seq) for seq, rank in ranks.items() if len(seq) >= 2)
    changed = True
    while changed:
        changed = False
        for _, seq in merges:
            i = 0
            while i < len(parts) - 1:
                if parts[i] + parts[i + 1] == seq:
                    parts[i : i + 2] = [seq]
                    changed = True
                else:
                    i += 1
    return [ranks[part] for part in parts]


def lcs_table_oracle(a, b):
    """Longest common subsequence length via the full DP table."""
    rows = len(a)
    cols = len(b)
    table = [[0] * (cols + 1) for _ in range(rows + 1)]
    for i in range(1, rows + 1):
        for j in range(1, cols + 1):
            if a[i - 1] == b[j - 1]:
                table[i][j] = table[i - 1][j - 1] + 1
            else:
                table[i][j] = max(table[i - 1][j], table[i][j - 1])
    return table[rows][cols]


def greedy_delete_simulation(words, cost, max_iterations=128):
    """Simulate gate-free greedy single-item deletion from the outside.

    Per iteration every single-item deletion of the current list is a
    candidate, scored by cost(items); only strict improvements survive,
    the lowest score wins and ties keep the lowest deleted index.  Stops
    at one item, at the iteration cap, or when nothing improves.
    """
    current = list(words)
    deleted = []
    while len(current) > 1 and len(deleted) < max_iterations:
        base = cost(current)
        best = None
        for i in range(len(current)):
            trial = current[:i] + current[i + 1 :]
            score = cost(trial)
            if score < base and (best is None or score < best[0]):
                best = (score, i, trial)
        if best is None:
            break
        deleted.append(best[1])
        current = best[2]
    return current, deleted
