import numpy as np

from appraisal.dynamics import (
    alpha_threshold,
    importance_of_others,
    importance_to_others,
    repeller_eps,
    vertex_threshold,
)
from appraisal.formats import format_float, load_network
from appraisal.network import support_structure

from ._base import AppraisalCommand


def _members(vertices) -> str:
    return "[" + ",".join(str(v) for v in sorted(vertices)) + "]"


class Command(AppraisalCommand):
    help = "Print the supporting layers, path coefficients and thresholds of one vertex."

    def add_arguments(self, parser):
        parser.add_argument("network", help="Network JSON file.")
        parser.add_argument("--vertex", type=int, required=True, help="Target vertex i.")

    def run(self, **options):
        model = load_network(options["network"])
        i = options["vertex"]
        structure = support_structure(model, i)
        out = self.stdout.write

        out(f"vertex: {i}")
        out(f"root: {'true' if i in model.root_set else 'false'}")
        out(f"in-degree: {model.in_degree(i)}")
        for k, (layer, fresh) in enumerate(zip(structure.layers, structure.differences)):
            out(f"layer {k}: S={_members(layer)} D={_members(fresh)}")

        out("alpha:")
        for k, fresh in enumerate(structure.differences):
            for j in sorted(fresh):
                out(f"  j={j} k={k} alpha={format_float(structure.alpha[j])}")

        eps = repeller_eps(model, i)
        out(f"alpha(n): {format_float(alpha_threshold(model.n))}")
        out(f"alpha_i: {format_float(vertex_threshold(model, i))}")
        if eps > 0.0:
            out(f"repeller eps: {format_float(eps)}")
            out(f"alpha_i(eps): {format_float(vertex_threshold(model, i, eps))}")

        uniform = np.full(model.n, 1.0 / model.n)
        out(f"importance of others at uniform: {format_float(importance_of_others(model, uniform)[i])}")
        out(f"importance to others at uniform: {format_float(importance_to_others(model, uniform)[i])}")
