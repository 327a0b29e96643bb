# cython: language_level=3
"""Cython monomial-merge kernel.

Same contract as `_kernel_py.merge_monomials`; see that module for the
monomial representation.
"""


def merge_monomials(tuple e1, tuple o1, tuple e2, tuple o2):
    cdef Py_ssize_t i, j, n1, n2, ne
    cdef long inversions = 0
    cdef list even = []
    cdef list merged = []
    cdef object a, b

    ne = len(e1)
    for i in range(ne):
        even.append(e1[i] + e2[i])

    n1 = len(o1)
    n2 = len(o2)
    if n1 == 0:
        return tuple(even), o2, 1
    if n2 == 0:
        return tuple(even), o1, 1

    i = 0
    j = 0
    while i < n1 and j < n2:
        a = o1[i]
        b = o2[j]
        if a == b:
            return None
        if a < b:
            merged.append(a)
            i += 1
        else:
            merged.append(b)
            j += 1
            inversions += n1 - i
    while i < n1:
        merged.append(o1[i])
        i += 1
    while j < n2:
        merged.append(o2[j])
        j += 1
    return tuple(even), tuple(merged), (-1 if inversions & 1 else 1)
