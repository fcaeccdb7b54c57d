from appraisal.formats import load_network

from ._base import AppraisalCommand


class Command(AppraisalCommand):
    help = "Validate a network file and print its root set."

    def add_arguments(self, parser):
        parser.add_argument("network", help="Network JSON file.")

    def run(self, **options):
        model = load_network(options["network"])
        roots = ",".join(str(i) for i in model.roots)
        self.stdout.write(f"rooted: true, roots: [{roots}]")
        if options["verbosity"] >= 2:
            non_roots = ",".join(str(i) for i in model.non_roots)
            self.stdout.write(f"n: {model.n}, edges: {len(model.edges)}, non-roots: [{non_roots}]")
