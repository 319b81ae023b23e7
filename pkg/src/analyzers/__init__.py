"""
Analyzers package
"""
