"""Optimal control of 2D Landau-Lifshitz-Gilbert magnetization dynamics.

Subpackages follow the solver chain: ``spectral`` (cosine-basis operators on
a Neumann rectangle), ``fields`` (vector-field algebra), ``state`` (forward
LLG solver), ``tangent`` (linearized solver), ``adjoint`` (backward sweep),
``control`` (cost, gradient, projected-gradient optimizer), ``verify``
(analytic-invariant checks), and ``cli`` (command line and on-disk formats).
"""

__version__ = "0.1.0"
