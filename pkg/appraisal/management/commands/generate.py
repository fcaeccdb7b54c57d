from appraisal.formats import dump_network
from appraisal.verify import GeneratorSpec, random_network

from ._base import AppraisalCommand


class Command(AppraisalCommand):
    help = "Write a random admissible network in the network file format."

    def add_arguments(self, parser):
        parser.add_argument("--n", type=int, required=True, help="Number of vertices.")
        parser.add_argument("--leaves", type=int, default=0, help="Number of non-root vertices.")
        parser.add_argument("--min-out-degree", type=int, default=2)
        parser.add_argument("--seed", type=int, default=0)
        parser.add_argument("--out", help="Network JSON path (stdout when omitted).")

    def run(self, **options):
        spec = GeneratorSpec(
            n=options["n"],
            non_root_count=options["leaves"],
            seed=options["seed"],
            min_out_degree=options["min_out_degree"],
        )
        self.emit(options["out"], dump_network(random_network(spec)))
