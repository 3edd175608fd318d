"""
Reqmin - requirement-traced test suite minimization engine
"""

__version__ = '1.0.0'
__author__ = 'Reqmin Team'
