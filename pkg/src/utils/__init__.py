"""
Shared logging, error types and report formatting
"""
