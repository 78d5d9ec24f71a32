"""Pure-Python Shapley aggregation kernel.

Reference implementation; the compiled kernel must be bit-identical, so
the accumulation order here is the contract: per player, masks ascending,
one scalar accumulator, term = weight[popcount] * (v(S+i) - v(S)). Do not
replace the loop with a vectorized sum; pairwise reduction changes the
rounding.
"""
from __future__ import annotations


def aggregate_shapley(table, n: int, weights) -> list[float]:
    """Shapley values from a dense coalition table.

    ``table[mask]`` is v(S) for the coalition whose members are the set
    bits of ``mask``; ``weights[s]`` is the exact coefficient
    s!(n-s-1)!/n! precomputed by the caller.
    """
    size = 1 << n
    if len(table) != size:
        raise ValueError(f"table has {len(table)} entries, expected {size}")
    if len(weights) != n:
        raise ValueError(f"got {len(weights)} weights for n={n}")
    values: list[float] = []
    for i in range(n):
        bit = 1 << i
        acc = 0.0
        for mask in range(size):
            if mask & bit:
                continue
            acc = acc + weights[_popcount(mask)] * (table[mask | bit] - table[mask])
        values.append(acc)
    return values


def _popcount(mask: int) -> int:
    return mask.bit_count()
