"""
Basic utilities for GravDamp: system helpers, quadrature and fitting helpers, HDF and CSV output.
Independent from the physics modules.
"""
