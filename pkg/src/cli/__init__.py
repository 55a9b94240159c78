"""
Empty init file for cli module
"""
