"""aeff: a small language of asynchronous signals and interrupts.

The package provides a parser, a type-and-effect checker, nondeterministic
small-step interpreters for sequential computations and parallel processes, a
command line driver (``aeff check | run | serve``), and an HTTP stepping
service for interactive exploration.
"""

__version__ = "0.1.0"
