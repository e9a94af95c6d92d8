"""Data-driven modelling toolkit for pilot-scale wastewater denitrification."""

__version__ = "0.1.0"
