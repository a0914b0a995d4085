"""
Duration and Interval HMM toolkit
"""

__version__ = "0.1.0"
