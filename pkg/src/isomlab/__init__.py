"""Computational toolkit for doubly commuting semigroups of isometries."""
