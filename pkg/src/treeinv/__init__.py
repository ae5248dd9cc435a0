"""Finite-depth portraits of regular-tree automorphisms and local-closure searches."""
