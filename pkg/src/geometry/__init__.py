"""
Geometry of parametric and discrete hypersurfaces
"""
