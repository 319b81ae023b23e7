"""
Isospectral package: Lax pair, Floquet discriminant and Melnikov gradients
"""
