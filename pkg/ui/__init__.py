"""
Presentation layer - command line.
"""
# Empty - ui.cli is imported directly
