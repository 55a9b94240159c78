"""
Empty init file for verifier module
"""
