"""frobwdvv: exact and numeric engine for WDVV potentials, Legendre-type
transformations of Frobenius manifolds, and their monodromy data."""

__version__ = "0.1.0"
