"""Analysis toolkit for randomized leader election on anonymous rings."""

__version__ = "0.1.0"
