import json

from appraisal.equilibrium import solve_equilibrium, vertex_equilibria
from appraisal.formats import load_network

from ._base import AppraisalCommand


class Command(AppraisalCommand):
    help = "Solve for the non-vertex equilibrium and report its stability as JSON."

    def add_arguments(self, parser):
        parser.add_argument("network", help="Network JSON file.")
        parser.add_argument("--out", help="Report path (stdout when omitted).")
        parser.add_argument(
            "--vertices",
            action="store_true",
            help="Also list the vertex equilibria with their largest real eigenvalue part.",
        )

    def run(self, **options):
        model = load_network(options["network"])
        payload = solve_equilibrium(model).as_dict()
        if options["vertices"]:
            payload["vertices"] = [
                {"vertex": found.vertex, "max_real_part": found.max_real_part, "unstable": found.unstable}
                for found in vertex_equilibria(model)
            ]
        self.emit(options["out"], json.dumps(payload, indent=2) + "\n")
