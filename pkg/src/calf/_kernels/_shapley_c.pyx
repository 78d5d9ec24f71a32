# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled Shapley aggregation kernel.

Mirrors pure.aggregate_shapley term for term. The build passes
-ffp-contract=off so the compiler cannot fuse the multiply-add; together
with the fixed mask order this keeps results bit-identical to the pure
kernel.
"""

cdef extern from *:
    int __builtin_popcountll(unsigned long long x)


def aggregate_shapley(const double[::1] table, int n, const double[::1] weights):
    cdef Py_ssize_t size = (<Py_ssize_t> 1) << n
    if table.shape[0] != size:
        raise ValueError(f"table has {table.shape[0]} entries, expected {size}")
    if weights.shape[0] != n:
        raise ValueError(f"got {weights.shape[0]} weights for n={n}")
    cdef Py_ssize_t mask, bit
    cdef int i
    cdef double acc
    out = []
    for i in range(n):
        bit = (<Py_ssize_t> 1) << i
        acc = 0.0
        for mask in range(size):
            if mask & bit:
                continue
            acc = acc + weights[__builtin_popcountll(<unsigned long long> mask)] * (
                table[mask | bit] - table[mask]
            )
        out.append(acc)
    return out
