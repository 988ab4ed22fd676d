"""
Configuration package for tokeneeg
"""
