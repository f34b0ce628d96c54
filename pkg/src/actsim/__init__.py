"""Deterministic simulator and consistency checker for replicated data types
that mix highly available weak operations with consensus-backed strong ones.

The package simulates replica protocols over reliable and total-order
broadcast, records client-observable histories, constructs visibility /
arbitration / perceived-arbitration witnesses, and mechanically checks the
consistency predicates (eventual visibility, no circular causality, return
value consistency, single order, and friends).
"""

__version__ = "0.1.0"
