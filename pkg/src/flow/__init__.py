"""
Empty init file for flow module
"""
