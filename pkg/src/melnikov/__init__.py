"""
Melnikov package: Melnikov-Arnold integrals, intersection equations and transition chains
"""
