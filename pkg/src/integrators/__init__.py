"""
Time integration package
"""
