"""Loop-group construction and verification of Willmore two-spheres."""

__version__ = "0.1.0"
