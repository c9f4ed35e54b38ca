"""gammaflow: dynamic dataflow graphs to Gamma programs and back.

Both forms have an executor with a seeded scheduler, so a graph can be run
side by side with its translation and the results compared.
"""

__version__ = "0.1.0"
