"""Triangle packings and covers in sparse random graphs."""

from .graph import Graph, GnpParams, TriangleSystem, enumerate_triangles, sample_gnp
from .exact import Budget, nu_exact, tau_exact, tree_nu_tau

__all__ = ["Graph", "GnpParams", "TriangleSystem", "enumerate_triangles", "sample_gnp",
           "Budget", "nu_exact", "tau_exact", "tree_nu_tau"]
