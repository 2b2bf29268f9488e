"""Discrete- and continuous-time quantum walks with their classical counterparts."""

__version__ = "0.1.0"
