"""Tensor-network simulation of an Ising chain that loses sites to its bath.

The package follows one experiment end to end: prepare a critical
environment chain in its ground state, attach a small strongly coupled
system block, evolve with Trotterized dynamics while the system boundary
walks inward one site per period, and record the entanglement entropy
across the moving cut.  The resulting rise-and-fall entropy trace is the
object of interest; an exact statevector oracle validates the whole
pipeline at small sizes.
"""

__version__ = "0.1.0"
