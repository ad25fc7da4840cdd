"""
Test suite for Sports Model Builder.
"""
