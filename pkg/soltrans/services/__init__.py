"""
Numerical services: geometry, profile integration, classification, surfaces, verification
"""
