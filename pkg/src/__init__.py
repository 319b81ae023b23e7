"""
Source package for the DNLS diffusion toolkit
"""

__version__ = "1.0.0"
