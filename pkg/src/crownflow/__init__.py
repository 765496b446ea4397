"""crownflow: equivariant harmonic map heat flow into hyperbolic 3-space.

Reconstructs framed PSL(2,C) representations from edge coordinates on an
ideal triangulation, builds equivariant initial maps on truncated
fundamental-domain meshes, and integrates the harmonic map heat flow with
the monitors that certify convergence, equivariance, and the principal-part
asymptotics at the ends.
"""

__version__ = "0.1.0"
