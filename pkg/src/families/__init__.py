"""
Empty init file for families module
"""
