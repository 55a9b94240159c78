"""
Empty init file for pde module
"""
