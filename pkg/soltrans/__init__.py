"""
soltrans - translating solitons of the mean curvature flow in Sol3
"""

__version__ = "1.0.0"
