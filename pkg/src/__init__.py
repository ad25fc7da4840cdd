"""
Brain acuity prediction toolkit.
"""
