"""Pure-Python monomial-merge kernel (fallback for the Cython version).

A monomial is a pair (even, odd): `even` is a tuple of exponents, one per
even generator; `odd` is a strictly increasing tuple of odd-generator
indices.  Merging two monomials adds even exponents, interleaves the odd
index sets, and returns the Koszul sign of the interleaving, or None when
an odd index repeats (odd square = 0).
"""


def merge_monomials(e1, o1, e2, o2):
    even = tuple(a + b for a, b in zip(e1, e2))
    if not o1:
        return even, o2, 1
    if not o2:
        return even, o1, 1
    # Count inversions: pairs (a in o1, b in o2) with a > b.  Each such
    # pair contributes one transposition when sorting o1 ++ o2.
    inversions = 0
    merged = []
    i = j = 0
    n1, n2 = len(o1), len(o2)
    while i < n1 and j < n2:
        a, b = o1[i], o2[j]
        if a == b:
            return None
        if a < b:
            merged.append(a)
            i += 1
        else:
            merged.append(b)
            j += 1
            inversions += n1 - i
    merged.extend(o1[i:])
    merged.extend(o2[j:])
    return even, tuple(merged), (-1 if inversions & 1 else 1)
