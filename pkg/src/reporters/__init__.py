"""
Reporters package
"""
