"""
User interface components for panelspec
"""

# Import common UI functions for easier access
from .banners import print_header, print_test_summary, print_criterion_table, print_mc_table
