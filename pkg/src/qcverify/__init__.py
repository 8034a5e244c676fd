"""qcverify: SMT-based symbolic verification of quantum circuits."""

__version__ = "0.1.0"
