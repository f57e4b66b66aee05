"""Isomorphism-approximation machinery over prime fields.

Subpackages cover: generalized CFI structures over ordered 3-regular graphs,
Weisfeiler-Leman and invertible-map partition refinement, coherent
configurations and their adjacency algebras, and module-theoretic decision
procedures for simultaneous matrix similarity, all validated against
brute-force oracles at desk scale.
"""

__version__ = "0.1.0"
