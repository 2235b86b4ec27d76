# hiermdp/__init__.py
# Two-timescale hierarchical budget allocation: central and federal solvers

__version__ = "1.0.0"
