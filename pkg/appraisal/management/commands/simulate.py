import io

from django.conf import settings

from appraisal.formats import (
    load_network,
    parse_opinions,
    parse_state,
    write_opinions_csv,
    write_trajectory_csv,
)
from appraisal.simulation import IntegratorConfig, integrate, simulate_consensus

from ._base import AppraisalCommand


class Command(AppraisalCommand):
    help = "Integrate the self-appraisal dynamics and write the trajectory CSV."

    def add_arguments(self, parser):
        parser.add_argument("network", help="Network JSON file.")
        parser.add_argument(
            "--x0",
            default="uniform",
            help="Initial appraisals: uniform, random:SEED or comma separated values.",
        )
        parser.add_argument("--horizon", type=float, default=settings.APPRAISAL_HORIZON)
        parser.add_argument("--step", type=float, default=settings.APPRAISAL_STEP)
        parser.add_argument("--record-every", type=int, default=settings.APPRAISAL_RECORD_EVERY)
        parser.add_argument("--out", help="Trajectory CSV path (stdout when omitted).")
        parser.add_argument("--z0", help="Comma separated initial opinions for the consensus process.")
        parser.add_argument("--opinions-out", help="Opinion trajectory CSV path.")

    def run(self, **options):
        model = load_network(options["network"])
        x0 = parse_state(options["x0"], model.n)
        cfg = IntegratorConfig.from_settings(
            step=options["step"],
            horizon=options["horizon"],
            record_every=options["record_every"],
        )
        trajectory = integrate(model, x0, cfg)

        buffer = io.StringIO()
        write_trajectory_csv(trajectory, buffer)
        self.emit(options["out"], buffer.getvalue())

        if options["z0"] is not None:
            z0 = parse_opinions(options["z0"], model.n)
            opinions = simulate_consensus(
                model, trajectory, z0, step=cfg.step, record_every=cfg.record_every
            )
            buffer = io.StringIO()
            write_opinions_csv(opinions, buffer)
            self.emit(options["opinions_out"], buffer.getvalue())
