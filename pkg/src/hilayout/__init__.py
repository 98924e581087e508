"""hilayout: hierarchical indoor-scene layout synthesis.

Turns structured scene descriptions (LLM-generated or fixture-provided)
into physically feasible 2D top-view layouts: a variational graph network
infers relative placements between objects, and a divide-and-conquer
solver arranges each functional area locally and the areas globally.
"""

__version__ = "0.1.0"
