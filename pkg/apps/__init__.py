"""
Reqmin Django Applications
"""
