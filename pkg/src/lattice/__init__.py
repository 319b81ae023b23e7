"""
Lattice package: phase space, vector fields and conserved quantities
"""
