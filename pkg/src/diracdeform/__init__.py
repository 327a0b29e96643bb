"""diracdeform: exact-arithmetic engine for graded brackets, Dirac
structures, Courant algebroids, and formal deformation theory.
"""

__version__ = "0.1.0"
