# cython: boundscheck=False, wraparound=False, language_level=3
"""Compiled hot kernel: token-level LCS length, the inner loop of ROUGE-L.

The greedy extractive oracle and gold content selection both score every
candidate pool sentence against the summary each step, so this DP dominates
corpus runs.
"""

from libc.stdlib cimport malloc, free
from libc.stdint cimport int64_t


def lcs_length(const int64_t[::1] a, const int64_t[::1] b):
    """Length of the longest common subsequence of two int64 id arrays."""
    cdef Py_ssize_t na = a.shape[0]
    cdef Py_ssize_t nb = b.shape[0]
    if na == 0 or nb == 0:
        return 0
    # keep the inner row short
    if na < nb:
        a, b = b, a
        na, nb = nb, na
    cdef Py_ssize_t i, j
    cdef int64_t x
    cdef Py_ssize_t best, up, left
    cdef Py_ssize_t *prev = <Py_ssize_t *> malloc((nb + 1) * sizeof(Py_ssize_t))
    cdef Py_ssize_t *cur = <Py_ssize_t *> malloc((nb + 1) * sizeof(Py_ssize_t))
    cdef Py_ssize_t *tmp
    if prev == NULL or cur == NULL:
        if prev != NULL:
            free(prev)
        if cur != NULL:
            free(cur)
        raise MemoryError()
    for j in range(nb + 1):
        prev[j] = 0
        cur[j] = 0
    for i in range(na):
        x = a[i]
        for j in range(1, nb + 1):
            if x == b[j - 1]:
                cur[j] = prev[j - 1] + 1
            else:
                up = prev[j]
                left = cur[j - 1]
                cur[j] = up if up >= left else left
        tmp = prev
        prev = cur
        cur = tmp
    best = prev[nb]
    free(prev)
    free(cur)
    return best
