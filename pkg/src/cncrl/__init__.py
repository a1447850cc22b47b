"""Compression-based policy evaluation and on-policy control.

Value estimates are built by Bayes rule from bucketed sequential density
models: one state model per (return, action) bucket and one return model
per action.  An exact stationary-distribution oracle over small explicit
MDPs certifies the construction end to end.
"""

__version__ = "0.1.0"
