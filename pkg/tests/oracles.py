"""Independent reference implementations used to pin down expected values.

Everything here is written directly from the definitions, sharing no code
with the package: brute-force Shapley enumerators, an exhaustive-search
minimal span decomposition, naive citation metrics, and finite-difference
gradients. Slow and simple on purpose.
"""
from __future__ import annotations

import math
from itertools import permutations


# ---------------------------------------------------------------- Shapley
def shapley_subset_oracle(table: list[float], n: int) -> list[float]:
    """Shapley values by the subset-sum definition.

    phi_i = sum over S not containing i of |S|!(n-|S|-1)!/n! * (v(S+i)-v(S)).
    Masks ascend and each player uses one scalar accumulator, which is the
    documented accumulation order of the kernel, so results are comparable
    bit for bit.
    """
    assert len(table) == 1 << n
    weights = [
        math.factorial(s) * math.factorial(n - s - 1) / math.factorial(n)
        for s in range(n)
    ]
    values = []
    for i in range(n):
        bit = 1 << i
        acc = 0.0
        for mask in range(1 << n):
            if mask & bit:
                continue
            acc = acc + weights[bin(mask).count("1")] * (table[mask | bit] - table[mask])
        values.append(acc)
    return values


def shapley_permutation_oracle(table: list[float], n: int) -> list[float]:
    """Shapley values by averaging marginals over all n! orderings."""
    assert len(table) == 1 << n
    totals = [0.0] * n
    count = 0
    for perm in permutations(range(n)):
        mask = 0
        for player in perm:
            new = mask | (1 << player)
            totals[player] += table[new] - table[mask]
            mask = new
        count += 1
    return [t / count for t in totals]


# ---------------------------------------------------------------- alignment
def minimal_alignment_oracle(
    left: list[str], right: list[str]
) -> list[tuple[tuple[int, int], tuple[int, int]]] | None:
    """All-cuts search for the finest tiling of both sequences into pairs
    of spans with equal concatenations. Returns None when no tiling exists.

    Exponential; only for small inputs. The minimal alignment closes each
    pair at the earliest point where the two concatenations agree, and the
    finest tiling is unique, so maximizing the number of pairs recovers it.
    """

    memo: dict = {}

    def best(i: int, j: int) -> list[tuple[tuple[int, int], tuple[int, int]]] | None:
        if i == len(left) and j == len(right):
            return []
        if (i, j) in memo:
            return memo[(i, j)]
        top: list | None = None
        for a in range(i + 1, len(left) + 1):
            for b in range(j + 1, len(right) + 1):
                if "".join(left[i:a]) == "".join(right[j:b]):
                    rest = best(a, b)
                    if rest is not None:
                        cand = [((i, a), (j, b))] + rest
                        if top is None or len(cand) > len(top):
                            top = cand
        memo[(i, j)] = top
        return top

    return best(0, 0)


# ---------------------------------------------------------------- metrics
def _phi(scorer, claim: str, evidence: str) -> float:
    return scorer.score(claim, evidence).value


def recall_oracle(sentences, passages, scorer) -> float:
    """Mean over all sentences of phi against the jointly cited passages."""
    total = 0.0
    for text, cits in sentences:
        total += _phi(scorer, text, join_evidence(passages, cits))
    return total / len(sentences)


def precision_oracle(sentences, passages, scorer) -> float:
    """Mean over cited sentences of mean_c max(phi(s,c), 1-phi(s,rest))."""
    terms = []
    for text, cits in sentences:
        if not cits:
            continue
        inner = []
        for c in sorted(cits):
            alone = _phi(scorer, text, join_evidence(passages, [c]))
            rest = _phi(scorer, text, join_evidence(passages, [x for x in cits if x != c]))
            inner.append(max(alone, 1.0 - rest))
        terms.append(sum(inner) / len(inner))
    if not terms:
        return 0.0
    return sum(terms) / len(terms)


def recall_binary_oracle(sentences, passages, scorer, threshold: float) -> float:
    hits = 0
    for text, cits in sentences:
        if cits and _phi(scorer, text, join_evidence(passages, cits)) >= threshold:
            hits += 1
    return hits / len(sentences)


def precision_binary_oracle(sentences, passages, scorer, threshold: float) -> float:
    """Fraction of citations not irrelevant; c is irrelevant iff it fails
    alone while the remaining citations succeed."""
    total = 0
    relevant = 0
    for text, cits in sentences:
        for c in sorted(cits):
            total += 1
            alone = _phi(scorer, text, join_evidence(passages, [c])) >= threshold
            rest = (
                _phi(scorer, text, join_evidence(passages, [x for x in cits if x != c]))
                >= threshold
            )
            if not (not alone and rest):
                relevant += 1
    return relevant / total if total else 0.0


def join_evidence(passages, citations) -> str:
    """Cited passages ascending by index, 'title. text' joined by spaces."""
    parts = []
    for k in sorted(citations):
        for p in passages:
            if p.index == k:
                parts.append(f"{p.title}. {p.text}")
    return " ".join(parts)


# ---------------------------------------------------------------- calculus
def finite_difference(f, x, eps: float = 1e-6):
    """Central-difference gradient of scalar f at flat numpy array x."""
    import numpy as np

    g = np.zeros_like(x, dtype=float)
    flat = x.reshape(-1)
    out = g.reshape(-1)
    for k in range(flat.size):
        orig = flat[k]
        flat[k] = orig + eps
        hi = f()
        flat[k] = orig - eps
        lo = f()
        flat[k] = orig
        out[k] = (hi - lo) / (2.0 * eps)
    return g
