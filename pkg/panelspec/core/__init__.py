"""
Core statistics for panelspec
"""
